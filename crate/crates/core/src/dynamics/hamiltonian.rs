use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_dense_cap, HermitianEigen};
use crate::error::{Result, SimError};
use crate::oracles::ClassicalFunction;
use crate::simcore::{kernel, DEFAULT_QUBIT_CAP};

const HERMITIAN_TOLERANCE: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli_matrix(p: char) -> Option<DMatrix<Complex64>> {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let entries = match p {
        'I' => [one, z, z, one],
        'X' => [z, one, one, z],
        'Y' => [z, c(0.0, -1.0), c(0.0, 1.0), z],
        'Z' => [one, z, z, -one],
        _ => return None,
    };
    Some(DMatrix::from_row_slice(2, 2, &entries))
}

/// Kronecker product where `factors[j]` acts on local bit `j`.
fn kron_local(factors: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    factors
        .iter()
        .fold(DMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, f| f.kronecker(&acc))
}

/// A Hermitian operator on at most three qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTerm {
    support: Vec<usize>,
    matrix: DMatrix<Complex64>,
    row_major: Vec<Complex64>,
}

impl LocalTerm {
    /// `matrix` is indexed with local bit `j` equal to qubit `support[j]`.
    pub fn new(support: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if support.is_empty() || support.len() > 3 {
            return Err(SimError::InvalidArgument(format!(
                "term support size {} not in 1..=3",
                support.len()
            )));
        }
        let distinct = support
            .iter()
            .enumerate()
            .all(|(i, a)| support[i + 1..].iter().all(|b| a != b));
        if !distinct {
            return Err(SimError::InvalidTargets {
                targets: support,
                n_qubits: 0,
            });
        }
        let dim = 1 << support.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(SimError::BadMatrixShape {
                expected: dim * dim,
                got: matrix.len(),
            });
        }
        let dev = (&matrix - matrix.adjoint())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if dev > HERMITIAN_TOLERANCE || !dev.is_finite() {
            return Err(SimError::NotHermitian(dev));
        }
        let row_major = matrix.transpose().iter().copied().collect();
        Ok(Self {
            support,
            matrix,
            row_major,
        })
    }

    /// `coeff * P_0 (x) P_1 ...` with `paulis[j]` on `support[j]`.
    pub fn pauli(support: &[usize], paulis: &str, coeff: f64) -> Result<Self> {
        let factors: Vec<_> = paulis
            .chars()
            .map(|p| {
                pauli_matrix(p.to_ascii_uppercase())
                    .ok_or_else(|| SimError::InvalidArgument(format!("unknown Pauli {p:?}")))
            })
            .collect::<Result<_>>()?;
        if factors.len() != support.len() {
            return Err(SimError::InvalidArgument(format!(
                "{} Paulis for {} qubits",
                factors.len(),
                support.len()
            )));
        }
        Self::new(support.to_vec(), kron_local(&factors) * c(coeff, 0.0))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    fn row_major(&self) -> &[Complex64] {
        &self.row_major
    }

    pub fn spectral_norm(&self) -> f64 {
        HermitianEigen::new(&self.matrix)
            .values
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

/// `H = sum_l H_l` with every `H_l` supported on at most three qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalHamiltonian {
    n_qubits: usize,
    terms: Vec<LocalTerm>,
}

impl LocalHamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<LocalTerm>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > DEFAULT_QUBIT_CAP {
            return Err(SimError::TooManyQubits {
                requested: n_qubits,
                cap: DEFAULT_QUBIT_CAP,
            });
        }
        if let Some(t) = terms.iter().find(|t| t.support.iter().any(|&q| q >= n_qubits)) {
            return Err(SimError::InvalidTargets {
                targets: t.support.clone(),
                n_qubits,
            });
        }
        Ok(Self { n_qubits, terms })
    }

    /// Open chain `sum_i J (XX + YY + ZZ)_{i,i+1} + h sum_i X_i`.
    pub fn heisenberg_chain(n_qubits: usize, coupling: f64, field: f64) -> Result<Self> {
        let mut terms = Vec::new();
        for i in 0..n_qubits.saturating_sub(1) {
            let xx = LocalTerm::pauli(&[i, i + 1], "XX", coupling)?;
            let yy = LocalTerm::pauli(&[i, i + 1], "YY", coupling)?;
            let zz = LocalTerm::pauli(&[i, i + 1], "ZZ", coupling)?;
            terms.push(LocalTerm::new(
                vec![i, i + 1],
                xx.matrix + yy.matrix + zz.matrix,
            )?);
        }
        if field != 0.0 {
            for i in 0..n_qubits {
                terms.push(LocalTerm::pauli(&[i], "X", field)?);
            }
        }
        Self::new(n_qubits, terms)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    /// Dense `2^n x 2^n` matrix `sum_l H_l (x) 1`.
    pub fn assemble_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense_cap(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut h = DMatrix::zeros(dim, dim);
        for term in &self.terms {
            let k = term.support.len();
            let offs: Vec<usize> = (0..1usize << k)
                .map(|l| {
                    term.support
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (j, &q)| acc | (l >> j & 1) << q)
                })
                .collect();
            let mut sorted = term.support.clone();
            sorted.sort_unstable();
            for rest in 0..dim >> k {
                let base = kernel::deposit(rest, &sorted);
                for (i, oi) in offs.iter().enumerate() {
                    for (j, oj) in offs.iter().enumerate() {
                        h[(base | oi, base | oj)] += term.matrix[(i, j)];
                    }
                }
            }
        }
        Ok(h)
    }

    /// `out += scale * H psi`, matrix-free.
    pub fn accumulate(&self, psi: &[Complex64], out: &mut [Complex64], scale: Complex64) {
        for term in &self.terms {
            kernel::accumulate_matrix(psi, out, term.row_major(), &term.support, scale);
        }
    }

    /// Triangle-inequality bound `sum_l ||H_l||` on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(LocalTerm::spectral_norm).sum()
    }

    /// Parses the term-file format:
    ///
    /// ```text
    /// # qsim-format v1
    /// qubits: 2
    /// support=0,1 matrix=1:0;0:0;0:0;0:0;0:0;-1:0;0:0;0:0;0:0;0:0;-1:0;0:0;0:0;0:0;0:0;1:0
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| SimError::Parse {
                line: lineno + 1,
                msg,
            };
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("qsim-format") {
                    if v.trim() != "v1" {
                        return Err(err(format!("unsupported format version {}", v.trim())));
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if let Some(n) = line.strip_prefix("qubits:") {
                n_qubits = Some(
                    n.trim()
                        .parse::<usize>()
                        .map_err(|_| err(format!("bad qubit count {:?}", n.trim())))?,
                );
                continue;
            }
            let mut support = None;
            let mut entries = None;
            for field in line.split_whitespace() {
                if let Some(s) = field.strip_prefix("support=") {
                    support = Some(
                        s.split(',')
                            .map(|q| q.parse::<usize>().map_err(|_| err(format!("bad qubit {q:?}"))))
                            .collect::<Result<Vec<_>>>()?,
                    );
                } else if let Some(m) = field.strip_prefix("matrix=") {
                    entries = Some(
                        m.split(';')
                            .map(|e| {
                                let (re, im) = e
                                    .split_once(':')
                                    .ok_or_else(|| err(format!("entry {e:?} is not re:im")))?;
                                Ok(c(
                                    re.parse().map_err(|_| err(format!("bad real part {re:?}")))?,
                                    im.parse().map_err(|_| err(format!("bad imaginary part {im:?}")))?,
                                ))
                            })
                            .collect::<Result<Vec<_>>>()?,
                    );
                } else {
                    return Err(err(format!("unknown field {field:?}")));
                }
            }
            let (support, entries) = support
                .zip(entries)
                .ok_or_else(|| err("term needs support= and matrix=".into()))?;
            let dim = 1 << support.len();
            if entries.len() != dim * dim {
                return Err(err(format!("expected {} entries, got {}", dim * dim, entries.len())));
            }
            let matrix = DMatrix::from_row_slice(dim, dim, &entries);
            terms.push(LocalTerm::new(support, matrix).map_err(|e| err(e.to_string()))?);
        }
        let n = n_qubits.ok_or(SimError::Parse {
            line: 0,
            msg: "missing `qubits:` line".into(),
        })?;
        Self::new(n, terms)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# qsim-format v1\nqubits: {}\n", self.n_qubits);
        for term in &self.terms {
            let support: Vec<String> = term.support.iter().map(usize::to_string).collect();
            let entries: Vec<String> = term
                .row_major()
                .iter()
                .map(|v| format!("{}:{}", v.re, v.im))
                .collect();
            let _ = writeln!(out, "support={} matrix={}", support.join(","), entries.join(";"));
        }
        out
    }
}

/// Diagonal `H_T = sum_z f(z) |z><z|` for a real cost table `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemHamiltonian {
    n_qubits: usize,
    costs: Vec<f64>,
}

impl ProblemHamiltonian {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        let len = costs.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(SimError::NotPowerOfTwo(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > DEFAULT_QUBIT_CAP {
            return Err(SimError::TooManyQubits {
                requested: n_qubits,
                cap: DEFAULT_QUBIT_CAP,
            });
        }
        if costs.iter().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidArgument("costs must be finite".into()));
        }
        Ok(Self { n_qubits, costs })
    }

    /// Integer-valued cost from a truth table.
    pub fn from_function(f: &ClassicalFunction) -> Result<Self> {
        Self::new(f.table().iter().map(|&v| v as f64).collect())
    }

    /// `f(z) = 1 - delta_{z, x0}`: zero cost only on the marked item.
    pub fn grover_cost(n_qubits: usize, marked: &[usize]) -> Result<Self> {
        Self::new(
            (0..1usize << n_qubits)
                .map(|z| if marked.contains(&z) { 0.0 } else { 1.0 })
                .collect(),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// All `z` attaining the minimum cost (within 1e-12).
    pub fn ground_states(&self) -> Vec<usize> {
        let min = self.costs.iter().copied().fold(f64::INFINITY, f64::min);
        (0..self.costs.len())
            .filter(|&z| self.costs[z] - min <= 1e-12)
            .collect()
    }

    pub fn has_unique_minimum(&self) -> bool {
        self.ground_states().len() == 1
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.costs.len(),
            self.costs.iter().map(|&v| c(v, 0.0)),
        ))
    }

    /// Cost-file format: optional `#` comments, then `2^n` real costs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut costs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("qsim-format") {
                    if v.trim() != "v1" {
                        return Err(SimError::Parse {
                            line: lineno + 1,
                            msg: format!("unsupported format version {}", v.trim()),
                        });
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            costs.push(line.parse::<f64>().map_err(|_| SimError::Parse {
                line: lineno + 1,
                msg: format!("bad cost {line:?}"),
            })?);
        }
        Self::new(costs)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# qsim-format v1\n");
        for v in &self.costs {
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

/// Either a sum of local terms or a diagonal cost operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Hamiltonian {
    Local(LocalHamiltonian),
    Diagonal(ProblemHamiltonian),
}

impl Hamiltonian {
    pub fn n_qubits(&self) -> usize {
        match self {
            Hamiltonian::Local(h) => h.n_qubits(),
            Hamiltonian::Diagonal(h) => h.n_qubits(),
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense_cap(self.n_qubits())?;
        Ok(match self {
            Hamiltonian::Local(h) => h.assemble_dense()?,
            Hamiltonian::Diagonal(h) => h.to_dense(),
        })
    }

    /// `out += scale * H psi`.
    pub fn accumulate(&self, psi: &[Complex64], out: &mut [Complex64], scale: Complex64) -> Result<()> {
        if psi.len() != 1 << self.n_qubits() || out.len() != psi.len() {
            return Err(SimError::QubitMismatch {
                expected: self.n_qubits(),
                got: psi.len().trailing_zeros() as usize,
            });
        }
        match self {
            Hamiltonian::Local(h) => h.accumulate(psi, out, scale),
            Hamiltonian::Diagonal(h) => {
                for ((o, p), &v) in out.iter_mut().zip(psi).zip(&h.costs) {
                    *o += scale * v * p;
                }
            }
        }
        Ok(())
    }

    /// Upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        match self {
            Hamiltonian::Local(h) => h.norm_bound(),
            Hamiltonian::Diagonal(h) => h.costs.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}
