//! `qsim` command-line front end. [`dispatch`] is the whole program; `main`
//! only wires it to the process streams so tests can drive it in-process.

use std::collections::hash_map::RandomState;
use std::ffi::OsString;
use std::fs;
use std::hash::{BuildHasher, Hasher};
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsim_core::SimError;
use serde_json::Value;

mod commands;
pub mod manifest;

pub const SEED_ENV: &str = "QSIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "qsim", version, about = "Statevector experiments: query algorithms, Grover, Shor, dynamics, error correction")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Master seed; falls back to $QSIM_SEED, then to entropy. Always echoed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the artifact here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grover search. CSV: k,analytic_prob,empirical_freq
    Grover(commands::GroverArgs),
    /// Deutsch / Deutsch-Jozsa. CSV: trial,verdict,queries,zero_probability
    DeutschJozsa(commands::DjArgs),
    /// Bernstein-Vazirani. CSV: trial,a,recovered,queries
    BernsteinVazirani(commands::BvArgs),
    /// Simon's algorithm. CSV: trial,period,recovered,queries
    Simon(commands::SimonArgs),
    /// Factoring by period finding. CSV: n,factor,a,period,trials,y_samples
    Shor(commands::ShorArgs),
    /// Quantum Fourier transform. CSV: y,probability
    Qft(commands::QftArgs),
    /// Trotterized evolution against the exact propagator. CSV: k,error
    Trotter(commands::TrotterArgs),
    /// Adiabatic interpolation with gap analysis. CSV: T,p,bound_T
    Adiabatic(commands::AdiabaticArgs),
    /// Error-correction pipeline or error-scaling sweep.
    /// CSV: epsilon,uncorrected,corrected (sweep)
    Qec(commands::QecArgs),
    /// Subcommand -> module/topic map.
    Manifest {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(SimError),
    Io(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(e) => write!(f, "error: {e}"),
            CliError::Io(m) => write!(f, "error: {m}"),
        }
    }
}

/// What a subcommand produces; rendered according to `--format`.
pub struct Artifact {
    pub json: Value,
    pub csv: String,
}

fn entropy_seed() -> u64 {
    RandomState::new().build_hasher().finish()
}

pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not a 64-bit seed"))),
        Err(_) => Ok(entropy_seed()),
    }
}

pub(crate) fn read_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn render(artifact: Artifact, seed: u64, format: Format) -> String {
    match format {
        Format::Json => {
            let mut json = artifact.json;
            if let Value::Object(map) = &mut json {
                map.insert("seed".into(), seed.into());
            }
            let mut s = serde_json::to_string_pretty(&json).expect("JSON values serialize");
            s.push('\n');
            s
        }
        Format::Csv => format!("# seed={seed}\n{}", artifact.csv),
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if let Command::Manifest { json } = cli.command {
        let text = if json {
            let mut s = serde_json::to_string_pretty(manifest::MANIFEST).expect("manifest serializes");
            s.push('\n');
            s
        } else {
            manifest::manifest_text()
        };
        return emit(&text, &cli.global, out);
    }
    let seed = resolve_seed(cli.global.seed)?;
    let artifact = commands::execute(&cli.command, seed, cli.global.format)?;
    emit(&render(artifact, seed, cli.global.format), &cli.global, out)
}

fn emit(text: &str, global: &GlobalOpts, out: &mut dyn Write) -> Result<(), CliError> {
    match &global.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code: 0 success, 1 domain error, 2 usage error.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                2
            } else {
                // --help / --version
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
