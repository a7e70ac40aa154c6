use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qsim_core::dynamics::{
    self, adiabatic_bound_time, adiabatic_run, default_initial_hamiltonian, gap_scan,
    round_trip_check, AdiabaticSchedule, Hamiltonian, LocalHamiltonian, LocalTerm,
    ProblemHamiltonian,
};
use qsim_core::grover::{self, GroverInstance, Iterations};
use qsim_core::oracles::{ClassicalFunction, PromiseKind};
use qsim_core::qec::{self, CodeKind, CodeSpec, NoiseEvent, NoiseKind, SyndromeMethod};
use qsim_core::querylib::{self, PromiseCheck};
use qsim_core::shor::{self, FactorOutcome, PeriodBackend, PeriodStrategy, ShorOptions};
use qsim_core::{Complex64, GateMatrix, RngStream, SimError, StateVector};
use serde_json::{json, Value};

use crate::{read_file, Artifact, CliError, Command, Format};

pub(crate) fn execute(cmd: &Command, seed: u64, _format: Format) -> Result<Artifact, CliError> {
    let rng = RngStream::new(seed);
    match cmd {
        Command::Grover(a) => grover_cmd(a, rng),
        Command::DeutschJozsa(a) => dj_cmd(a, rng),
        Command::BernsteinVazirani(a) => bv_cmd(a, rng),
        Command::Simon(a) => simon_cmd(a, rng),
        Command::Shor(a) => shor_cmd(a, rng),
        Command::Qft(a) => qft_cmd(a, rng),
        Command::Trotter(a) => trotter_cmd(a, rng),
        Command::Adiabatic(a) => adiabatic_cmd(a),
        Command::Qec(a) => qec_cmd(a, rng),
        Command::Manifest { .. } => unreachable!("handled before seeding"),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn verdict_name(k: PromiseKind) -> &'static str {
    match k {
        PromiseKind::Constant => "constant",
        PromiseKind::Balanced => "balanced",
    }
}

// ---------------------------------------------------------------- grover

fn parse_iterations(s: &str) -> Result<Iterations, String> {
    match s {
        "auto" => Ok(Iterations::Auto),
        "random" => Ok(Iterations::Random),
        k => k
            .parse()
            .map(Iterations::Fixed)
            .map_err(|_| format!("expected an integer, `auto` or `random`, got {k:?}")),
    }
}

#[derive(Debug, Args)]
pub struct GroverArgs {
    /// Number of qubits; the search space has 2^n items.
    #[arg(long)]
    pub n: usize,
    /// Marked items, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "random_marked")]
    pub marked: Vec<usize>,
    /// Mark this many items chosen at random instead.
    #[arg(long)]
    pub random_marked: Option<usize>,
    /// Iteration count: an integer, `auto` or `random`.
    #[arg(long, default_value = "auto", value_parser = parse_iterations)]
    pub iterations: Iterations,
    /// Measurements per iteration count in the sweep.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

fn grover_cmd(a: &GroverArgs, mut rng: RngStream) -> Result<Artifact, CliError> {
    let instance = match (a.random_marked, a.marked.is_empty()) {
        (Some(m), _) => GroverInstance::random(a.n, m, &mut rng)?,
        (None, false) => GroverInstance::new(a.n, a.marked.clone())?,
        (None, true) => return Err(usage("grover needs --marked or --random-marked")),
    };
    if a.trials == 0 {
        return Err(usage("--trials must be >= 1"));
    }
    let n_items = instance.search_space();
    let m = instance.marked().len();
    let mut run_rng = rng.split(0);
    let mut runs = Vec::with_capacity(a.trials);
    for _ in 0..a.trials {
        runs.push(grover::grover_search(&instance, a.iterations, &mut run_rng)?);
    }
    let first = &runs[0];
    let successes = runs.iter().filter(|r| r.success).count();

    let k_opt = grover::optimal_iterations(n_items, m);
    let curve = grover::success_curve(&instance, 2 * k_opt.max(1))?;
    let mut csv = String::from("k,analytic_prob,empirical_freq\n");
    let mut sweep = Vec::new();
    for (k, &sim) in curve.iter().enumerate() {
        let mut r = rng.split(1 + k as u64);
        let mut hits = 0;
        for _ in 0..a.trials {
            if grover::grover_search(&instance, Iterations::Fixed(k), &mut r)?.success {
                hits += 1;
            }
        }
        let analytic = grover::grover_success_prob(n_items, m, k);
        let freq = hits as f64 / a.trials as f64;
        let _ = writeln!(csv, "{k},{analytic},{freq}");
        sweep.push(json!({"k": k, "analytic_prob": analytic, "simulated_prob": sim, "empirical_freq": freq}));
    }
    Ok(Artifact {
        json: json!({
            "command": "grover",
            "n": a.n,
            "marked": instance.marked(),
            "found": first.found,
            "success": first.success,
            "iterations": first.iterations,
            "oracle_queries": first.oracle_queries,
            "final_success_prob": first.final_success_prob,
            "optimal_iterations": k_opt,
            "trials": a.trials,
            "success_rate": successes as f64 / a.trials as f64,
            "sweep": sweep,
        }),
        csv,
    })
}

// ---------------------------------------------------------------- query algorithms

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DjKind {
    Constant0,
    Constant1,
    Balanced,
    Parity,
    Random,
}

#[derive(Debug, Args)]
pub struct DjArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Built-in function family (ignored with --oracle-file).
    #[arg(long, value_enum, default_value_t = DjKind::Random)]
    pub kind: DjKind,
    /// Truth-table file ("n_in n_out" header, one binary word per line).
    #[arg(long)]
    pub oracle_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Run even if the function is neither constant nor balanced.
    #[arg(long)]
    pub skip_promise_check: bool,
}

fn load_function(path: &Option<PathBuf>) -> Result<Option<ClassicalFunction>, CliError> {
    match path {
        Some(p) => Ok(Some(ClassicalFunction::parse_truth_table(&read_file(p)?)?)),
        None => Ok(None),
    }
}

fn dj_cmd(a: &DjArgs, mut rng: RngStream) -> Result<Artifact, CliError> {
    let f = match load_function(&a.oracle_file)? {
        Some(f) => f,
        None => match a.kind {
            DjKind::Constant0 => ClassicalFunction::constant(a.n, false)?,
            DjKind::Constant1 => ClassicalFunction::constant(a.n, true)?,
            DjKind::Balanced => ClassicalFunction::random_balanced(a.n, &mut rng)?,
            DjKind::Parity => ClassicalFunction::parity(a.n)?,
            DjKind::Random => {
                if rng.below(2) == 0 {
                    ClassicalFunction::constant(a.n, rng.below(2) == 1)?
                } else {
                    ClassicalFunction::random_balanced(a.n, &mut rng)?
                }
            }
        },
    };
    let check = if a.skip_promise_check {
        PromiseCheck::Skip
    } else {
        PromiseCheck::Validate
    };
    let zero_probability = querylib::dj_zero_probability(&f)?;
    let mut csv = String::from("trial,verdict,queries,zero_probability\n");
    let mut trials = Vec::new();
    for t in 0..a.trials {
        let v = if f.n_in() == 1 && check == PromiseCheck::Validate {
            querylib::deutsch(&f, &mut rng)?
        } else {
            querylib::deutsch_jozsa(&f, check, &mut rng)?
        };
        let _ = writeln!(csv, "{t},{},{},{zero_probability}", verdict_name(v.verdict), v.queries_used);
        trials.push(v);
    }
    let first = trials.first().ok_or_else(|| usage("--trials must be >= 1"))?;
    Ok(Artifact {
        json: json!({
            "command": "deutsch-jozsa",
            "n": f.n_in(),
            "verdict": verdict_name(first.verdict),
            "queries": first.queries_used,
            "trials": a.trials,
            "verdicts": trials.iter().map(|v| verdict_name(v.verdict)).collect::<Vec<_>>(),
            "distribution": {"all_zeros": zero_probability, "other": 1.0 - zero_probability},
            "truth": f.promise_kind().map(verdict_name),
            "classical_worst_case_queries": querylib::classical_dj_worst_case(f.n_in()),
        }),
        csv,
    })
}

#[derive(Debug, Args)]
pub struct BvArgs {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Hidden string as an integer (bit i is a_i); random if absent.
    #[arg(long)]
    pub a: Option<u64>,
    #[arg(long)]
    pub oracle_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
}

fn bv_cmd(a: &BvArgs, mut rng: RngStream) -> Result<Artifact, CliError> {
    let (f, hidden) = match load_function(&a.oracle_file)? {
        Some(f) => (f, None),
        None => {
            if a.n == 0 || a.n > 63 {
                return Err(usage("--n must be in 1..=63"));
            }
            let hidden = a.a.unwrap_or_else(|| rng.below(1 << a.n));
            (ClassicalFunction::bernstein_vazirani(a.n, hidden)?, Some(hidden))
        }
    };
    if a.trials == 0 {
        return Err(usage("--trials must be >= 1"));
    }
    let mut csv = String::from("trial,a,recovered,queries\n");
    let mut results = Vec::new();
    for t in 0..a.trials {
        let (rec, q) = querylib::bernstein_vazirani(&f, &mut rng)?;
        let shown = hidden.map(|h| h.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{t},{shown},{rec},{q}");
        results.push((rec, q));
    }
    Ok(Artifact {
        json: json!({
            "command": "bernstein-vazirani",
            "n": f.n_in(),
            "a": hidden,
            "recovered": results[0].0,
            "queries": results[0].1,
            "trials": a.trials,
            "all_recovered": results.iter().map(|r| r.0).collect::<Vec<_>>(),
        }),
        csv,
    })
}

#[derive(Debug, Args)]
pub struct SimonArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Hidden nonzero period; random if absent.
    #[arg(long)]
    pub period: Option<u64>,
    #[arg(long)]
    pub oracle_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
}

fn simon_cmd(a: &SimonArgs, mut rng: RngStream) -> Result<Artifact, CliError> {
    let (f, hidden) = match load_function(&a.oracle_file)? {
        Some(f) => (f, None),
        None => {
            if a.n < 2 || a.n > 7 {
                return Err(usage("--n must be in 2..=7 (2n qubits are simulated)"));
            }
            let p = match a.period {
                Some(p) => p,
                None => 1 + rng.below((1 << a.n) - 1),
            };
            (ClassicalFunction::simon(a.n, p, &mut rng)?, Some(p))
        }
    };
    if a.trials == 0 {
        return Err(usage("--trials must be >= 1"));
    }
    let mut csv = String::from("trial,period,recovered,queries\n");
    let mut outcomes = Vec::new();
    for t in 0..a.trials {
        let o = querylib::simon(&f, &mut rng)?;
        let shown = hidden.map(|h| h.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{t},{shown},{},{}", o.period, o.queries);
        outcomes.push(o);
    }
    let distribution: Vec<Value> = querylib::simon_distribution(&f)?
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 1e-12)
        .map(|(y, &p)| json!({"y": y, "probability": p}))
        .collect();
    let mean_queries =
        outcomes.iter().map(|o| o.queries as f64).sum::<f64>() / outcomes.len() as f64;
    Ok(Artifact {
        json: json!({
            "command": "simon",
            "n": f.n_in(),
            "period": hidden,
            "recovered": outcomes[0].period,
            "queries": outcomes[0].queries,
            "samples": outcomes[0].samples,
            "trials": a.trials,
            "mean_queries": mean_queries,
            "distribution": distribution,
        }),
        csv,
    })
}

// ---------------------------------------------------------------- shor / qft

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Cf,
    Lcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Quantum,
    Classical,
}

#[derive(Debug, Args)]
pub struct ShorArgs {
    /// The number to factor.
    #[arg(long)]
    pub n: u64,
    /// Fix the base a instead of drawing it.
    #[arg(long)]
    pub base: Option<u64>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Cf)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 20)]
    pub max_trials: usize,
    /// `classical` replaces period finding by brute-force order finding.
    #[arg(long, value_enum, default_value_t = BackendArg::Quantum)]
    pub backend: BackendArg,
}

fn shor_cmd(a: &ShorArgs, mut rng: RngStream) -> Result<Artifact, CliError> {
    let opts = ShorOptions {
        max_trials: a.max_trials,
        strategy: match a.strategy {
            StrategyArg::Cf => PeriodStrategy::ContinuedFraction,
            StrategyArg::Lcm => PeriodStrategy::Lcm,
        },
        base: a.base,
        backend: match a.backend {
            BackendArg::Quantum => PeriodBackend::Quantum,
            BackendArg::Classical => PeriodBackend::Classical,
        },
    };
    match shor::shor_factor(a.n, &mut rng, &opts)? {
        FactorOutcome::PrimePower { prime, exponent } => Ok(Artifact {
            json: json!({"command": "shor", "n": a.n, "prime_power": {"prime": prime, "exponent": exponent}}),
            csv: format!("n,prime,exponent\n{},{prime},{exponent}\n", a.n),
        }),
        FactorOutcome::Factor(run) => {
            let ys: Vec<String> = run.y_samples.iter().map(u64::to_string).collect();
            let csv = format!(
                "n,factor,a,period,trials,y_samples\n{},{},{},{},{},{}\n",
                run.n,
                run.factor,
                run.a,
                run.period.map(|p| p.to_string()).unwrap_or_default(),
                run.trials,
                ys.join(";")
            );
            Ok(Artifact {
                json: json!({
                    "command": "shor",
                    "n": run.n,
                    "factor": run.factor,
                    "cofactor": run.n / run.factor,
                    "a": run.a,
                    "period": run.period,
                    "trials": run.trials,
                    "y_samples": run.y_samples,
                    "candidate_periods": run.candidate_periods,
                    "register": run.plan.map(|p| json!({"q_in": p.q_in, "q_out": p.q_out, "reduced": p.reduced})),
                }),
                csv,
            })
        }
    }
}

#[derive(Debug, Args)]
pub struct QftArgs {
    #[arg(long)]
    pub q: usize,
    /// Drop conditional phases at qubit distance >= m.
    #[arg(long)]
    pub cutoff_m: Option<usize>,
    /// Compare against the dense DFT on random states.
    #[arg(long)]
    pub check: bool,
    /// Input basis state.
    #[arg(long, default_value_t = 1, conflicts_with = "input_period")]
    pub input: usize,
    /// Use the uniform superposition over multiples of this period as input.
    #[arg(long)]
    pub input_period: Option<usize>,
    /// Random states for --check.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

fn qft_cmd(a: &QftArgs, mut rng: RngStream) -> Result<Artifact, CliError> {
    let qft = shor::qft_circuit(a.q, a.cutoff_m)?;
    let dim = 1usize << a.q;
    let mut state = match a.input_period {
        Some(0) => return Err(usage("--input-period must be >= 1")),
        Some(p) => StateVector::from_unnormalized(
            (0..dim)
                .map(|x| Complex64::new(if x % p == 0 { 1.0 } else { 0.0 }, 0.0))
                .collect(),
        )?,
        None => StateVector::new_basis_state(a.q, a.input)?,
    };
    qft.circuit.apply_unitary(&mut state)?;
    let probs = state.probabilities();
    let mut csv = String::from("y,probability\n");
    for (y, p) in probs.iter().enumerate() {
        let _ = writeln!(csv, "{y},{p}");
    }
    let max_deviation = if a.check {
        let mut worst = 0.0f64;
        for _ in 0..a.trials.max(1) {
            let psi = StateVector::random(a.q, &mut rng)?;
            let reference = shor::dft_reference(psi.amplitudes())?;
            let mut out = psi.clone();
            qft.circuit.apply_unitary(&mut out)?;
            let dev = out
                .amplitudes()
                .iter()
                .zip(&reference)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            worst = worst.max(dev);
        }
        Some(worst)
    } else {
        None
    };
    let cutoff_error = match a.cutoff_m {
        Some(m) if a.q <= dynamics::DENSE_QUBIT_CAP => Some(shor::approx_qft_operator_norm(a.q, m)?),
        _ => None,
    };
    Ok(Artifact {
        json: json!({
            "command": "qft",
            "q": a.q,
            "cutoff_m": a.cutoff_m,
            "gate_count": qft.gate_count(),
            "hadamards": qft.hadamards,
            "phase_gates": qft.phase_gates,
            "swaps": qft.swaps,
            "max_deviation": max_deviation,
            "cutoff_operator_norm": cutoff_error,
            "distribution": probs,
        }),
        csv,
    })
}

// ---------------------------------------------------------------- dynamics

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Open Heisenberg chain with a transverse field.
    Heisenberg,
    /// X + Z on a single qubit.
    Xz,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| usage(format!("bad list entry {v:?}")))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct TrotterArgs {
    /// Evolution time.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Comma-separated step counts.
    #[arg(long, default_value = "16,32,64,128,256")]
    pub k_sweep: String,
    /// Term file ("qubits: n", then "support=i,j matrix=re:im;...").
    #[arg(long)]
    pub hamiltonian_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Model::Heisenberg)]
    pub model: Model,
    /// Chain length for the built-in model.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub coupling: f64,
    #[arg(long, default_value_t = 0.5)]
    pub field: f64,
}

fn trotter_cmd(a: &TrotterArgs, mut rng: RngStream) -> Result<Artifact, CliError> {
    let h = match &a.hamiltonian_file {
        Some(p) => LocalHamiltonian::parse(&read_file(p)?)?,
        None => match a.model {
            Model::Heisenberg => LocalHamiltonian::heisenberg_chain(a.n, a.coupling, a.field)?,
            Model::Xz => LocalHamiltonian::new(
                1,
                vec![LocalTerm::pauli(&[0], "X", 1.0)?, LocalTerm::pauli(&[0], "Z", 1.0)?],
            )?,
        },
    };
    let ks: Vec<usize> = parse_list(&a.k_sweep)?;
    let psi = StateVector::random(h.n_qubits(), &mut rng)?;
    let exact = dynamics::exact_evolve(&h, a.t, &psi)?;
    let mut csv = String::from("k,error\n");
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for &k in &ks {
        let err = dynamics::state_distance(&dynamics::trotter_evolve(&h, a.t, k, &psi)?, &exact);
        let _ = writeln!(csv, "{k},{err:e}");
        rows.push(json!({"k": k, "error": err}));
        errs.push(err);
    }
    let slope = if ks.len() >= 2 && errs.iter().all(|&e| e > 0.0) {
        let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        Some(qec::loglog_slope(&xs, &errs))
    } else {
        None
    };
    Ok(Artifact {
        json: json!({
            "command": "trotter",
            "n_qubits": h.n_qubits(),
            "terms": h.terms().len(),
            "t": a.t,
            "errors": rows,
            "loglog_slope": slope,
        }),
        csv,
    })
}

#[derive(Debug, Args)]
pub struct AdiabaticArgs {
    /// Cost file: 2^n real costs, one per line.
    #[arg(long)]
    pub cost_file: Option<PathBuf>,
    /// Qubits of the built-in marked-item cost.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Zero-cost items of the built-in cost (all others cost 1).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub marked: Vec<usize>,
    /// Comma-separated run times; default is 1/4, 1/2, 1, 2 times the bound.
    #[arg(long = "T-sweep", alias = "t-sweep")]
    pub t_sweep: Option<String>,
    #[arg(long, default_value_t = 0.3)]
    pub epsilon: f64,
    /// Grid points for the gap scan.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

fn adiabatic_cmd(a: &AdiabaticArgs) -> Result<Artifact, CliError> {
    let target = match &a.cost_file {
        Some(p) => ProblemHamiltonian::parse(&read_file(p)?)?,
        None => {
            if let Some(&x) = a.marked.iter().find(|&&x| x >= 1 << a.n.min(20)) {
                return Err(CliError::Domain(SimError::IndexOutOfRange {
                    index: x,
                    n_qubits: a.n,
                }));
            }
            ProblemHamiltonian::grover_cost(a.n, &a.marked)?
        }
    };
    let n = target.n_qubits();
    let h0 = Hamiltonian::Local(default_initial_hamiltonian(n)?);
    let ht = Hamiltonian::Diagonal(target);
    let report = gap_scan(&h0, &ht, a.samples)?;
    let bound = adiabatic_bound_time(&report, a.epsilon).ok();
    let times: Vec<f64> = match (&a.t_sweep, bound) {
        (Some(s), _) => parse_list(s)?,
        (None, Some(b)) => vec![b / 4.0, b / 2.0, b, 2.0 * b],
        (None, None) => return Err(CliError::Domain(SimError::ZeroGap)),
    };
    let mut csv = String::from("T,p,bound_T\n");
    let mut rows = Vec::new();
    let bound_s = bound.map(|b| b.to_string()).unwrap_or_default();
    for &t in &times {
        let sched = AdiabaticSchedule::new(t)?;
        let out = adiabatic_run(&h0, &ht, &sched)?;
        let back = round_trip_check(&h0, &ht, &sched)?;
        let _ = writeln!(csv, "{t},{},{bound_s}", out.success_prob);
        rows.push(json!({"T": t, "p": out.success_prob, "round_trip": back, "steps": out.steps, "max_drift": out.max_drift}));
    }
    Ok(Artifact {
        json: json!({
            "command": "adiabatic",
            "n_qubits": n,
            "epsilon": a.epsilon,
            "delta_min": report.delta_min,
            "s_min": report.s_min,
            "theta": report.theta,
            "degenerate": report.degenerate,
            "bound_T": bound,
            "runs": rows,
        }),
        csv,
    })
}

// ---------------------------------------------------------------- qec

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorArg {
    None,
    X,
    Y,
    Z,
    RandomUnitary,
    Env,
}

#[derive(Debug, Args)]
pub struct QecArgs {
    /// repetition | shor9 | steane7
    #[arg(long, default_value = "shor9")]
    pub code: CodeKind,
    #[arg(long, value_enum, default_value_t = ErrorArg::RandomUnitary)]
    pub error: ErrorArg,
    #[arg(long, default_value_t = 0)]
    pub qubit: usize,
    /// Run the error-scaling sweep over these epsilons instead.
    #[arg(long)]
    pub epsilon_sweep: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
}

fn qec_cmd(a: &QecArgs, mut rng: RngStream) -> Result<Artifact, CliError> {
    let code = CodeSpec::new(a.code)?;
    if let Some(s) = &a.epsilon_sweep {
        let eps: Vec<f64> = parse_list(s)?;
        let points = qec::error_scaling_experiment(&code, &eps, a.trials, &rng)?;
        let (unc, cor): (Vec<f64>, Vec<f64>) =
            points.iter().map(|p| (p.uncorrected, p.corrected)).unzip();
        let slopes = |ys: &[f64]| {
            let pts: Vec<(f64, f64)> = eps.iter().copied().zip(ys.iter().copied()).filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
            (pts.len() >= 2).then(|| {
                let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                qec::loglog_slope(&x, &y)
            })
        };
        return Ok(Artifact {
            json: json!({
                "command": "qec",
                "code": a.code.name(),
                "trials": a.trials,
                "points": points.iter().map(|p| json!({"epsilon": p.epsilon, "uncorrected": p.uncorrected, "corrected": p.corrected})).collect::<Vec<_>>(),
                "uncorrected_slope": slopes(&unc),
                "corrected_slope": slopes(&cor),
            }),
            csv: qec::scaling_csv(&points),
        });
    }

    let logical = StateVector::random(1, &mut rng)?;
    let kind = match a.error {
        ErrorArg::None => None,
        ErrorArg::X => Some(NoiseKind::BitFlip),
        ErrorArg::Y => Some(NoiseKind::PauliY),
        ErrorArg::Z => Some(NoiseKind::PhaseFlip),
        ErrorArg::RandomUnitary => Some(NoiseKind::GeneralUnitary(GateMatrix::random_unitary(1, &mut rng)?)),
        ErrorArg::Env => Some(NoiseKind::EntanglingEnvironment),
    };
    let event = kind.map(|k| NoiseEvent::new(k, a.qubit));
    let out = qec::protect(&code, &logical, event.as_ref(), SyndromeMethod::AncillaCircuit, &mut rng)?;
    let syndrome: String = out.report.syndrome.iter().map(|b| char::from(b'0' + b)).collect();
    let correction = out.report.correction.map(|(q, p)| format!("{p:?}{q}"));
    let error_name = format!("{:?}", a.error).to_lowercase();
    let csv = format!(
        "code,error,qubit,syndrome,correction,correctable,logical_fidelity,block_fidelity\n{},{},{},{},{},{},{},{}\n",
        a.code.name(),
        error_name,
        a.qubit,
        syndrome,
        correction.clone().unwrap_or_else(|| "none".into()),
        out.report.correctable,
        out.logical_fidelity,
        out.block_fidelity
    );
    Ok(Artifact {
        json: json!({
            "command": "qec",
            "code": a.code.name(),
            "error": error_name,
            "qubit": a.qubit,
            "syndrome": syndrome,
            "correction": correction,
            "correctable": out.report.correctable,
            "logical_fidelity": out.logical_fidelity,
            "block_fidelity": out.block_fidelity,
        }),
        csv,
    })
}
