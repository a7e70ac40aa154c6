//! Local-Hamiltonian time evolution: dense exact propagation, Trotter
//! product formulas, and adiabatic interpolation (see [`adiabatic`]).
//!
//! Units have `hbar = 1`. All dense routines are capped at
//! [`DENSE_QUBIT_CAP`] qubits.

pub mod adiabatic;
mod hamiltonian;

pub use adiabatic::{
    adiabatic_bound_time, adiabatic_run, default_initial_hamiltonian, gap_scan, round_trip_check,
    AdiabaticOutcome, AdiabaticSchedule, GapReport, GapSample,
};
pub use hamiltonian::{Hamiltonian, LocalHamiltonian, LocalTerm, ProblemHamiltonian};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::simcore::{kernel, StateVector};

/// Largest register for which dense `2^n x 2^n` matrices are formed.
pub const DENSE_QUBIT_CAP: usize = 10;

pub(crate) fn check_dense_cap(n: usize) -> Result<()> {
    if n > DENSE_QUBIT_CAP {
        return Err(SimError::TooManyQubits {
            requested: n,
            cap: DENSE_QUBIT_CAP,
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn new(matrix: &DMatrix<Complex64>) -> Self {
        let eig = matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Self { values, vectors }
    }

    /// `exp(-i H t)` applied to `v`.
    pub fn evolve(&self, t: f64, v: &DVector<Complex64>) -> DVector<Complex64> {
        let coeffs = self.vectors.adjoint() * v;
        let phased = DVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(&self.values)
                .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t)),
        );
        &self.vectors * phased
    }

    /// Indices of eigenvalues within `tol` of `values[level]`.
    pub fn manifold(&self, level: usize, tol: f64) -> Vec<usize> {
        let e = self.values[level];
        (0..self.values.len())
            .filter(|&j| (self.values[j] - e).abs() <= tol)
            .collect()
    }

    /// Dense unitary `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let phases = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        );
        &self.vectors * DMatrix::from_diagonal(&phases) * self.vectors.adjoint()
    }
}

fn to_dvector(state: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(state.amplitudes())
}

/// `|psi(t)> = exp(-i H t)|psi(0)>` by dense eigendecomposition.
pub fn exact_evolve(h: &LocalHamiltonian, t: f64, state: &StateVector) -> Result<StateVector> {
    if state.n_qubits() != h.n_qubits() {
        return Err(SimError::QubitMismatch {
            expected: h.n_qubits(),
            got: state.n_qubits(),
        });
    }
    let eig = HermitianEigen::new(&h.assemble_dense()?);
    let out = eig.evolve(t, &to_dvector(state));
    StateVector::from_amplitudes(out.iter().copied().collect())
}

/// First-order product formula `(prod_l exp(-i H_l t/k))^k`, terms applied in
/// their stored order.
pub fn trotter_evolve(
    h: &LocalHamiltonian,
    t: f64,
    k: usize,
    state: &StateVector,
) -> Result<StateVector> {
    if k == 0 {
        return Err(SimError::InvalidArgument("Trotter step count must be >= 1".into()));
    }
    if state.n_qubits() != h.n_qubits() {
        return Err(SimError::QubitMismatch {
            expected: h.n_qubits(),
            got: state.n_qubits(),
        });
    }
    let dt = t / k as f64;
    let steps: Vec<(Vec<Complex64>, &[usize])> = h
        .terms()
        .iter()
        .map(|term| {
            let u = HermitianEigen::new(term.matrix()).propagator(dt);
            (u.transpose().iter().copied().collect(), term.support())
        })
        .collect();
    let mut out = state.clone();
    for _ in 0..k {
        for (u, support) in &steps {
            kernel::apply_matrix(out.amplitudes_mut(), u, support);
        }
    }
    Ok(out)
}

/// `<psi|H|psi>`.
pub fn energy(h: &Hamiltonian, state: &StateVector) -> Result<f64> {
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    h.accumulate(state.amplitudes(), &mut out, Complex64::new(1.0, 0.0))?;
    Ok(state
        .amplitudes()
        .iter()
        .zip(&out)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .re)
}

/// Euclidean distance between two states (phase sensitive).
pub fn state_distance(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
