//! Statevector representation, gate kernels, measurement and circuit execution.

mod circuit;
mod gate;
pub(crate) mod kernel;
mod state;

pub use circuit::{Circuit, MeasurementRecord, Step};
pub use gate::{GateMatrix, GateOp};
pub use state::{DensityMatrix, StateVector};
pub(crate) use state::gather;

/// Default upper bound on the number of simulated qubits.
pub const DEFAULT_QUBIT_CAP: usize = 14;

/// Tolerance for the normalization invariant.
pub const NORM_TOLERANCE: f64 = 1e-10;
