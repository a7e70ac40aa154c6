use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::rng::RngStream;

const UNITARY_TOLERANCE: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A unitary on 1 to 3 qubits, stored row-major.
///
/// Local basis ordering: bit `j` of a row/column index is the value of the
/// `j`-th target qubit of the [`GateOp`] the matrix is bound to.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    arity: usize,
    entries: Vec<Complex64>,
}

impl GateMatrix {
    /// Builds a gate, rejecting anything that fails `U^dagger U = 1` within 1e-10.
    pub fn new(arity: usize, entries: Vec<Complex64>) -> Result<Self> {
        if !(1..=3).contains(&arity) {
            return Err(SimError::InvalidArgument(format!(
                "gate arity {arity} not in 1..=3"
            )));
        }
        let dim = 1 << arity;
        if entries.len() != dim * dim {
            return Err(SimError::BadMatrixShape {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let gate = Self { arity, entries };
        let dev = gate.unitarity_deviation();
        if dev > UNITARY_TOLERANCE || !dev.is_finite() {
            return Err(SimError::NotUnitary(dev));
        }
        Ok(gate)
    }

    fn known(arity: usize, entries: Vec<Complex64>) -> Self {
        Self::new(arity, entries).expect("built-in gate is unitary")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    /// Max-entry deviation of `U^dagger U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let v: Complex64 = (0..d).map(|k| self.get(k, i).conj() * self.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim();
        let entries = (0..d * d)
            .map(|idx| self.get(idx % d, idx / d).conj())
            .collect();
        Self {
            arity: self.arity,
            entries,
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &GateMatrix) -> Result<Self> {
        if self.arity != other.arity {
            return Err(SimError::BadMatrixShape {
                expected: self.entries.len(),
                got: other.entries.len(),
            });
        }
        let d = self.dim();
        let entries = (0..d * d)
            .map(|idx| {
                let (i, j) = (idx / d, idx % d);
                (0..d).map(|k| self.get(i, k) * other.get(k, j)).sum()
            })
            .collect();
        Self::new(self.arity, entries)
    }

    pub fn identity(arity: usize) -> Self {
        let d = 1 << arity;
        let entries = (0..d * d)
            .map(|idx| if idx / d == idx % d { c(1.0, 0.0) } else { c(0.0, 0.0) })
            .collect();
        Self::known(arity, entries)
    }

    pub fn hadamard() -> Self {
        let h = FRAC_1_SQRT_2;
        Self::known(1, vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
    }

    pub fn pauli_x() -> Self {
        Self::known(1, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn pauli_y() -> Self {
        Self::known(1, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn pauli_z() -> Self {
        Self::known(1, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    /// The phase gate `|1> -> i|1>`.
    pub fn phase_s() -> Self {
        Self::phase(std::f64::consts::FRAC_PI_2)
    }

    /// `diag(1, e^{i theta})`.
    pub fn phase(theta: f64) -> Self {
        Self::known(
            1,
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, theta)],
        )
    }

    /// Rotation `exp(-i angle/2 n.sigma)` about the unit vector `axis`.
    pub fn axis_rotation(axis: [f64; 3], angle: f64) -> Result<Self> {
        let len = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len == 0.0 || !len.is_finite() {
            return Err(SimError::InvalidArgument("rotation axis must be nonzero".into()));
        }
        let [nx, ny, nz] = axis.map(|a| a / len);
        let (s, co) = (angle / 2.0).sin_cos();
        Self::new(
            1,
            vec![
                c(co, -s * nz),
                c(-s * ny, -s * nx),
                c(s * ny, -s * nx),
                c(co, s * nz),
            ],
        )
    }

    /// Haar-random unitary by Gram-Schmidt on a complex Gaussian matrix.
    pub fn random_unitary(arity: usize, rng: &mut RngStream) -> Result<Self> {
        let d = 1 << arity;
        let mut cols: Vec<Vec<Complex64>> = (0..d)
            .map(|_| (0..d).map(|_| c(rng.normal(), rng.normal())).collect())
            .collect();
        for j in 0..d {
            for k in 0..j {
                let proj: Complex64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let prev = cols[k].clone();
                for (x, p) in cols[j].iter_mut().zip(prev) {
                    *x -= proj * p;
                }
            }
            let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            cols[j].iter_mut().for_each(|x| *x /= norm);
        }
        let entries = (0..d * d).map(|idx| cols[idx % d][idx / d]).collect();
        Self::new(arity, entries)
    }

    /// CNOT with local order (control, target).
    pub fn cnot() -> Self {
        Self::permutation(2, &[0, 3, 2, 1])
    }

    pub fn cz() -> Self {
        Self::controlled_phase(std::f64::consts::PI)
    }

    pub fn swap() -> Self {
        Self::permutation(2, &[0, 2, 1, 3])
    }

    /// `diag(1, 1, 1, e^{i theta})`.
    pub fn controlled_phase(theta: f64) -> Self {
        let mut entries = vec![c(0.0, 0.0); 16];
        entries[0] = c(1.0, 0.0);
        entries[5] = c(1.0, 0.0);
        entries[10] = c(1.0, 0.0);
        entries[15] = Complex64::from_polar(1.0, theta);
        Self::known(2, entries)
    }

    /// Toffoli with local order (control, control, target).
    pub fn toffoli() -> Self {
        Self::permutation(3, &[0, 1, 2, 7, 4, 5, 6, 3])
    }

    /// Permutation matrix sending local basis state `j` to `image[j]`.
    pub fn permutation(arity: usize, image: &[usize]) -> Self {
        let d = 1 << arity;
        let mut entries = vec![c(0.0, 0.0); d * d];
        for (j, &i) in image.iter().enumerate() {
            entries[i * d + j] = c(1.0, 0.0);
        }
        Self::known(arity, entries)
    }
}

/// A gate bound to specific qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    matrix: GateMatrix,
    targets: Vec<usize>,
}

impl GateOp {
    pub fn new(matrix: GateMatrix, targets: Vec<usize>) -> Result<Self> {
        let distinct = targets
            .iter()
            .enumerate()
            .all(|(i, a)| targets[i + 1..].iter().all(|b| a != b));
        if targets.len() != matrix.arity() || !distinct {
            return Err(SimError::InvalidTargets {
                targets,
                n_qubits: matrix.arity(),
            });
        }
        Ok(Self { matrix, targets })
    }

    pub fn matrix(&self) -> &GateMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.dagger(),
            targets: self.targets.clone(),
        }
    }

    pub fn fits(&self, n_qubits: usize) -> bool {
        self.targets.iter().all(|&t| t < n_qubits)
    }
}
