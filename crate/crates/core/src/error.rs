use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("basis index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("{requested} qubits exceeds the cap of {cap}")]
    TooManyQubits { requested: usize, cap: usize },

    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix has {got} entries, expected {expected}")]
    BadMatrixShape { expected: usize, got: usize },

    #[error("invalid qubit targets {targets:?} for {n_qubits} qubits")]
    InvalidTargets { targets: Vec<usize>, n_qubits: usize },

    #[error("qubit count mismatch: expected {expected}, got {got}")]
    QubitMismatch { expected: usize, got: usize },

    #[error("empty qubit list")]
    EmptyQubitList,

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("promise violated: {0}")]
    PromiseViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("GF(2) row {row:#b} does not fit in {width} bits")]
    RowWidth { row: u64, width: usize },

    #[error("Simon's algorithm did not reach rank {target} within {cap} runs")]
    SimonCapExceeded { target: usize, cap: usize },

    #[error("cannot factor {0}: {1}")]
    NotFactorable(u64, String),

    #[error("factoring {n} failed after {trials} trials")]
    FactoringFailed { n: u64, trials: usize },

    #[error("norm drift {drift:e} exceeds budget {budget:e} at step {step}; increase the step count")]
    NormDrift { drift: f64, budget: f64, step: usize },

    #[error("spectral gap vanishes")]
    ZeroGap,

    #[error("missing environment qubit for entangling noise")]
    MissingEnvironment,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("circuit contains non-unitary steps and cannot be inverted")]
    NotInvertible,
}
