use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gate::{GateMatrix, GateOp};
use super::kernel;
use super::{DEFAULT_QUBIT_CAP, NORM_TOLERANCE};
use crate::error::{Result, SimError};
use crate::rng::RngStream;

/// Dense `2^k x 2^k` density matrix of a subsystem.
pub type DensityMatrix = DMatrix<Complex64>;

/// Pure state of `n` qubits. Qubit `i` has weight `2^i` in the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|index>` on `n_qubits` qubits, subject to the default qubit cap.
    pub fn new_basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        Self::new_basis_state_capped(n_qubits, index, DEFAULT_QUBIT_CAP)
    }

    pub fn new_basis_state_capped(n_qubits: usize, index: usize, cap: usize) -> Result<Self> {
        if n_qubits > cap {
            return Err(SimError::TooManyQubits {
                requested: n_qubits,
                cap,
            });
        }
        if index >> n_qubits != 0 {
            return Err(SimError::IndexOutOfRange { index, n_qubits });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps an amplitude vector, checking length and normalization.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(SimError::NotPowerOfTwo(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes `amps` first; fails only on length or a zero vector.
    pub fn from_unnormalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(SimError::NotNormalized(norm * norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amps)
    }

    /// Uniform superposition `sum_x |x> / sqrt(2^n)`.
    pub fn uniform(n_qubits: usize) -> Result<Self> {
        let mut s = Self::new_basis_state(n_qubits, 0)?;
        let a = Complex64::new(((1usize << n_qubits) as f64).sqrt().recip(), 0.0);
        s.amps.iter_mut().for_each(|x| *x = a);
        Ok(s)
    }

    /// Haar-random state from normalized complex Gaussians.
    pub fn random(n_qubits: usize, rng: &mut RngStream) -> Result<Self> {
        if n_qubits > DEFAULT_QUBIT_CAP {
            return Err(SimError::TooManyQubits {
                requested: n_qubits,
                cap: DEFAULT_QUBIT_CAP,
            });
        }
        let amps = (0..1usize << n_qubits)
            .map(|_| Complex64::new(rng.normal(), rng.normal()))
            .collect();
        Self::from_unnormalized(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Raw mutable access for kernels in sibling modules; callers keep the norm.
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|amps[x]|^2` for every basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal distribution of `qubits`; outcome bit `j` is `qubits[j]`.
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_qubits(qubits)?;
        let mut out = vec![0.0; 1 << qubits.len()];
        for (idx, a) in self.amps.iter().enumerate() {
            out[gather(idx, qubits)] += a.norm_sqr();
        }
        Ok(out)
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(SimError::QubitMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Phase-insensitive comparison `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// Largest amplitude-wise difference; phase sensitive.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Tensor product with `other` placed on new, higher-index qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.n_qubits + other.n_qubits;
        if n > DEFAULT_QUBIT_CAP {
            return Err(SimError::TooManyQubits {
                requested: n,
                cap: DEFAULT_QUBIT_CAP,
            });
        }
        let mut amps = Vec::with_capacity(1 << n);
        for b in &other.amps {
            amps.extend(self.amps.iter().map(|a| a * b));
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    /// Appends `count` fresh qubits in `|0>` above the existing ones.
    pub fn extend_zeros(&self, count: usize) -> Result<StateVector> {
        self.tensor(&StateVector::new_basis_state(count, 0)?)
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        let distinct = qubits
            .iter()
            .enumerate()
            .all(|(i, a)| qubits[i + 1..].iter().all(|b| a != b));
        if !distinct || qubits.iter().any(|&q| q >= self.n_qubits) {
            return Err(SimError::InvalidTargets {
                targets: qubits.to_vec(),
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        if !op.fits(self.n_qubits) {
            return Err(SimError::InvalidTargets {
                targets: op.targets().to_vec(),
                n_qubits: self.n_qubits,
            });
        }
        kernel::apply_matrix(&mut self.amps, op.matrix().entries(), op.targets());
        Ok(())
    }

    /// Convenience wrapper building the [`GateOp`] on the fly.
    pub fn apply_gate(&mut self, matrix: &GateMatrix, targets: &[usize]) -> Result<()> {
        if targets.len() != matrix.arity() {
            return Err(SimError::InvalidTargets {
                targets: targets.to_vec(),
                n_qubits: self.n_qubits,
            });
        }
        self.check_qubits(targets)?;
        kernel::apply_matrix(&mut self.amps, matrix.entries(), targets);
        Ok(())
    }

    /// Applies a basis permutation `|i> -> |map(i)>`. `map` must be a bijection.
    pub fn permute_basis(&mut self, map: impl Fn(usize) -> usize) {
        let mut next = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            next[map(i)] = *a;
        }
        self.amps = next;
    }

    /// Samples `qubits` with Born probabilities and collapses the state.
    ///
    /// `bits[j]` is the outcome for `qubits[j]`. The post-measurement state is
    /// renormalized; this is the only place renormalization happens.
    pub fn measure_subset(&mut self, qubits: &[usize], rng: &mut RngStream) -> Result<Vec<u8>> {
        if qubits.is_empty() {
            return Err(SimError::EmptyQubitList);
        }
        let marginals = self.marginal_probabilities(qubits)?;
        let outcome = sample_index(&marginals, rng);
        let keep = marginals[outcome];
        let scale = keep.sqrt().recip();
        for (idx, a) in self.amps.iter_mut().enumerate() {
            if gather(idx, qubits) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok((0..qubits.len()).map(|j| (outcome >> j & 1) as u8).collect())
    }

    /// Measures every qubit and returns the basis index.
    pub fn measure_all(&mut self, rng: &mut RngStream) -> usize {
        let probs = self.probabilities();
        let outcome = sample_index(&probs, rng);
        self.amps.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        self.amps[outcome] = Complex64::new(1.0, 0.0);
        outcome
    }

    /// Measures `qubit` and flips it back to `|0>` if the outcome was 1.
    pub fn reset(&mut self, qubit: usize, rng: &mut RngStream) -> Result<u8> {
        let bit = self.measure_subset(&[qubit], rng)?[0];
        if bit == 1 {
            self.apply_gate(&GateMatrix::pauli_x(), &[qubit])?;
        }
        Ok(bit)
    }

    /// Reduced density matrix of `keep` (at most 6 qubits). Local bit `j` of
    /// a row/column index is the value of `keep[j]`.
    pub fn reduced_density_matrix(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(SimError::EmptyQubitList);
        }
        if keep.len() > 6 {
            return Err(SimError::TooManyQubits {
                requested: keep.len(),
                cap: 6,
            });
        }
        self.check_qubits(keep)?;
        let dim = 1 << keep.len();
        let mask: usize = keep.iter().map(|q| 1 << q).sum();
        let mut rho = DensityMatrix::zeros(dim, dim);
        // Group amplitudes by the configuration of the traced-out qubits.
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        let offs: Vec<usize> = (0..dim).map(|l| scatter(l, keep)).collect();
        for rest in 0..self.amps.len() >> keep.len() {
            let base = kernel::deposit(rest, &sorted);
            debug_assert_eq!(base & mask, 0);
            for i in 0..dim {
                let ai = self.amps[base | offs[i]];
                if ai.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    rho[(i, j)] += ai * self.amps[base | offs[j]].conj();
                }
            }
        }
        Ok(rho)
    }

    /// `<target| rho_qubits |target>`: fidelity of the subsystem on `qubits`
    /// with the pure state `target`, tracing out everything else.
    pub fn subsystem_fidelity(&self, target: &StateVector, qubits: &[usize]) -> Result<f64> {
        if target.n_qubits != qubits.len() {
            return Err(SimError::QubitMismatch {
                expected: qubits.len(),
                got: target.n_qubits,
            });
        }
        self.check_qubits(qubits)?;
        let mut sorted = qubits.to_vec();
        sorted.sort_unstable();
        let offs: Vec<usize> = (0..target.len()).map(|l| scatter(l, qubits)).collect();
        let mut total = 0.0;
        for rest in 0..self.amps.len() >> qubits.len() {
            let base = kernel::deposit(rest, &sorted);
            let overlap: Complex64 = offs
                .iter()
                .zip(&target.amps)
                .map(|(o, t)| t.conj() * self.amps[base | o])
                .sum();
            total += overlap.norm_sqr();
        }
        Ok(total)
    }

    /// `index,re,im` rows, indices ascending.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im\n");
        for (i, a) in self.amps.iter().enumerate() {
            let _ = writeln!(out, "{i},{:e},{:e}", a.re, a.im);
        }
        out
    }
}

/// Collects the bits of `idx` at `qubits` into a compact integer.
pub(crate) fn gather(idx: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &q)| acc | (idx >> q & 1) << j)
}

/// Inverse of [`gather`]: spreads compact bits onto `qubits`.
pub(crate) fn scatter(local: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &q)| acc | (local >> j & 1) << q)
}

/// Inverse-CDF draw. Never returns an index with zero probability.
fn sample_index(probs: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = probs.iter().sum();
    let r = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
            acc += p;
            if r < acc {
                return i;
            }
        }
    }
    last_nonzero
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_states() {
        let s = StateVector::new_basis_state(1, 0).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let s = StateVector::new_basis_state(2, 3).unwrap();
        assert_eq!(s.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
        // x = 5 = 0b101: qubits 0 and 2 set
        let s = StateVector::new_basis_state(3, 5).unwrap();
        assert_eq!(s.amplitudes()[5], c(1.0, 0.0));
    }

    #[test]
    fn basis_state_errors() {
        assert!(matches!(
            StateVector::new_basis_state(2, 4),
            Err(SimError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            StateVector::new_basis_state(15, 0),
            Err(SimError::TooManyQubits { .. })
        ));
        assert!(StateVector::new_basis_state_capped(15, 0, 16).is_ok());
    }

    #[test]
    fn hadamard_phase_cnot_examples() {
        let mut s = StateVector::new_basis_state(1, 0).unwrap();
        s.apply_gate(&GateMatrix::hadamard(), &[0]).unwrap();
        assert!((s.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);

        let mut s = StateVector::new_basis_state(1, 1).unwrap();
        s.apply_gate(&GateMatrix::phase_s(), &[0]).unwrap();
        assert!((s.amplitudes()[1] - c(0.0, 1.0)).norm() < 1e-15);

        // |x=1, y=0>: control qubit 0 set, index 1
        let mut s = StateVector::new_basis_state(2, 1).unwrap();
        s.apply_gate(&GateMatrix::cnot(), &[0, 1]).unwrap();
        assert_eq!(s.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn invalid_targets_rejected() {
        let mut s = StateVector::new_basis_state(2, 0).unwrap();
        assert!(s.apply_gate(&GateMatrix::hadamard(), &[2]).is_err());
        assert!(s.apply_gate(&GateMatrix::cnot(), &[0, 0]).is_err());
    }

    #[test]
    fn measure_basis_state_is_deterministic() {
        // |0,1>: qubit 0 = 0, qubit 1 = 1 -> index 2
        let mut s = StateVector::new_basis_state(2, 2).unwrap();
        let before = s.clone();
        let mut rng = RngStream::new(5);
        for _ in 0..10 {
            assert_eq!(s.measure_subset(&[0], &mut rng).unwrap(), vec![0]);
        }
        assert_eq!(s, before);
        assert!(matches!(
            s.measure_subset(&[], &mut rng),
            Err(SimError::EmptyQubitList)
        ));
    }

    #[test]
    fn measure_frequency_of_plus_state() {
        let mut rng = RngStream::new(2024);
        let mut ones = 0;
        let trials = 10_000;
        for _ in 0..trials {
            let mut s = StateVector::new_basis_state(2, 0).unwrap();
            s.apply_gate(&GateMatrix::hadamard(), &[0]).unwrap();
            ones += s.measure_subset(&[0], &mut rng).unwrap()[0] as usize;
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
        let freq = ones as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
    }

    #[test]
    fn inner_products() {
        let zero = StateVector::new_basis_state(1, 0).unwrap();
        let one = StateVector::new_basis_state(1, 1).unwrap();
        assert_eq!(zero.inner_product(&zero).unwrap(), c(1.0, 0.0));
        assert_eq!(zero.inner_product(&one).unwrap(), c(0.0, 0.0));
        let psi = StateVector::uniform(4).unwrap();
        let x0 = StateVector::new_basis_state(4, 11).unwrap();
        assert!((psi.inner_product(&x0).unwrap().norm() - 0.25).abs() < 1e-15);
        assert!(zero.inner_product(&psi).is_err());
    }

    #[test]
    fn reduced_density_matrices() {
        // |0> (x) |1>
        let s = StateVector::new_basis_state(2, 2).unwrap();
        let rho = s.reduced_density_matrix(&[0]).unwrap();
        assert_eq!(rho[(0, 0)], c(1.0, 0.0));
        assert_eq!(rho[(1, 1)], c(0.0, 0.0));

        let h = FRAC_1_SQRT_2;
        let bell = StateVector::from_amplitudes(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])
            .unwrap();
        let rho = bell.reduced_density_matrix(&[0]).unwrap();
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((rho[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(rho[(0, 1)].norm() < 1e-15);

        let big = StateVector::new_basis_state(7, 0).unwrap();
        assert!(big.reduced_density_matrix(&[0, 1, 2, 3, 4, 5, 6]).is_err());
        assert!(big.reduced_density_matrix(&[]).is_err());
    }

    #[test]
    fn subsystem_fidelity_matches_density_matrix() {
        let mut rng = RngStream::new(11);
        let s = StateVector::random(5, &mut rng).unwrap();
        let t = StateVector::random(2, &mut rng).unwrap();
        let keep = [3, 1];
        let rho = s.reduced_density_matrix(&keep).unwrap();
        let mut expect = c(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                expect += t.amplitudes()[i].conj() * rho[(i, j)] * t.amplitudes()[j];
            }
        }
        let got = s.subsystem_fidelity(&t, &keep).unwrap();
        assert!((got - expect.re).abs() < 1e-12);
    }

    #[test]
    fn tensor_places_other_on_high_qubits() {
        let a = StateVector::new_basis_state(1, 1).unwrap();
        let b = StateVector::new_basis_state(2, 2).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.n_qubits(), 3);
        assert_eq!(ab.amplitudes()[1 | 2 << 1], c(1.0, 0.0));
    }

    #[test]
    fn from_amplitudes_checks() {
        assert!(matches!(
            StateVector::from_amplitudes(vec![c(1.0, 0.0); 3]),
            Err(SimError::NotPowerOfTwo(3))
        ));
        assert!(matches!(
            StateVector::from_amplitudes(vec![c(1.0, 0.0); 2]),
            Err(SimError::NotNormalized(_))
        ));
    }

    #[test]
    fn csv_dump() {
        let s = StateVector::new_basis_state(1, 1).unwrap();
        assert_eq!(s.to_csv(), "index,re,im\n0,0e0,0e0\n1,1e0,0e0\n");
    }

    #[test]
    fn reset_returns_to_zero() {
        let mut rng = RngStream::new(1);
        let mut s = StateVector::new_basis_state(2, 3).unwrap();
        assert_eq!(s.reset(1, &mut rng).unwrap(), 1);
        assert_eq!(s.probabilities()[1], 1.0);
    }
}
