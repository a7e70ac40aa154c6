//! Dense statevector simulation of quantum query algorithms, Shor factoring,
//! local-Hamiltonian dynamics and small quantum error-correcting codes.
//!
//! Everything runs on one substrate, [`simcore::StateVector`]: `2^n` complex
//! amplitudes where qubit `i` carries weight `2^i` in the basis index
//! (little-endian). Gates are applied in place over amplitude strides; the
//! full `2^n x 2^n` unitary is never built outside of test oracles.

pub mod dynamics;
pub mod error;
pub mod grover;
pub mod oracles;
pub mod qec;
pub mod querylib;
pub mod rng;
pub mod shor;
pub mod simcore;

pub use error::{Result, SimError};
pub use num_complex::Complex64;
pub use rng::RngStream;
pub use simcore::{Circuit, GateMatrix, GateOp, StateVector};
