use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ManifestEntry {
    pub subcommand: &'static str,
    pub module: &'static str,
    pub topic: &'static str,
    pub csv_columns: &'static str,
}

pub const MANIFEST: &[ManifestEntry] = &[
    ManifestEntry {
        subcommand: "deutsch-jozsa",
        module: "querylib",
        topic: "Deutsch and Deutsch-Jozsa: constant vs balanced with one query",
        csv_columns: "trial,verdict,queries,zero_probability",
    },
    ManifestEntry {
        subcommand: "bernstein-vazirani",
        module: "querylib",
        topic: "Bernstein-Vazirani: hidden linear function with one query",
        csv_columns: "trial,a,recovered,queries",
    },
    ManifestEntry {
        subcommand: "simon",
        module: "querylib",
        topic: "Simon's problem: hidden XOR period via GF(2) elimination",
        csv_columns: "trial,period,recovered,queries",
    },
    ManifestEntry {
        subcommand: "grover",
        module: "grover",
        topic: "Grover search: oracle and diffusion reflections, optimal iteration count",
        csv_columns: "k,analytic_prob,empirical_freq",
    },
    ManifestEntry {
        subcommand: "qft",
        module: "shor",
        topic: "Quantum Fourier transform circuit and its approximate variant",
        csv_columns: "y,probability",
    },
    ManifestEntry {
        subcommand: "shor",
        module: "shor",
        topic: "Shor factoring: period finding and continued fractions",
        csv_columns: "n,factor,a,period,trials,y_samples",
    },
    ManifestEntry {
        subcommand: "trotter",
        module: "dynamics",
        topic: "Trotter formula for local Hamiltonian evolution",
        csv_columns: "k,error",
    },
    ManifestEntry {
        subcommand: "adiabatic",
        module: "dynamics::adiabatic",
        topic: "Adiabatic quantum computation: spectral gap and run-time bound",
        csv_columns: "T,p,bound_T",
    },
    ManifestEntry {
        subcommand: "qec",
        module: "qec",
        topic: "Quantum error correction: repetition, Shor-9 and Steane-7 codes",
        csv_columns: "epsilon,uncorrected,corrected",
    },
];

pub fn manifest_text() -> String {
    let mut out = String::from("subcommand\tmodule\ttopic\n");
    for e in MANIFEST {
        out.push_str(&format!("{}\t{}\t{}\n", e.subcommand, e.module, e.topic));
    }
    out
}
