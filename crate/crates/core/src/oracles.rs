//! Classical functions as truth tables and their reversible oracle embeddings.
//!
//! Oracles act directly as basis permutations on the statevector: one call of
//! [`OracleUnitary::apply`] is one query. The input register occupies qubits
//! `0..n_in` and the output register qubits `n_in..n_in + n_out`.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Result, SimError};
use crate::rng::RngStream;
use crate::simcore::{StateVector, DEFAULT_QUBIT_CAP};

/// Largest input width for which truth tables are built.
pub const MAX_INPUT_BITS: usize = DEFAULT_QUBIT_CAP;

/// `a . x mod 2`.
pub fn dot_mod2(a: u64, x: u64) -> u8 {
    ((a & x).count_ones() & 1) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromiseKind {
    Constant,
    Balanced,
}

/// `f: {0,1}^n_in -> {0,1}^n_out` as a dense table indexed by input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalFunction {
    n_in: usize,
    n_out: usize,
    table: Vec<u64>,
}

impl ClassicalFunction {
    pub fn new(n_in: usize, n_out: usize, table: Vec<u64>) -> Result<Self> {
        if n_in > MAX_INPUT_BITS {
            return Err(SimError::TooManyQubits {
                requested: n_in,
                cap: MAX_INPUT_BITS,
            });
        }
        if n_out == 0 || n_out > 63 {
            return Err(SimError::InvalidFunction(format!(
                "output width {n_out} not in 1..=63"
            )));
        }
        if table.len() != 1 << n_in {
            return Err(SimError::InvalidFunction(format!(
                "table has {} entries, expected {}",
                table.len(),
                1usize << n_in
            )));
        }
        if let Some((x, v)) = table.iter().enumerate().find(|(_, &v)| v >> n_out != 0) {
            return Err(SimError::InvalidFunction(format!(
                "f({x}) = {v} does not fit in {n_out} bits"
            )));
        }
        Ok(Self { n_in, n_out, table })
    }

    pub fn from_fn(n_in: usize, n_out: usize, f: impl Fn(u64) -> u64) -> Result<Self> {
        if n_in > MAX_INPUT_BITS {
            return Err(SimError::TooManyQubits {
                requested: n_in,
                cap: MAX_INPUT_BITS,
            });
        }
        Self::new(n_in, n_out, (0..1u64 << n_in).map(f).collect())
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.table[x as usize]
    }

    pub fn constant(n: usize, value: bool) -> Result<Self> {
        Self::from_fn(n, 1, |_| value as u64)
    }

    /// Boolean function that is 1 exactly on `ones`, which must hold `2^(n-1)`
    /// distinct inputs.
    pub fn balanced_from_subset(n: usize, ones: &[u64]) -> Result<Self> {
        if n == 0 {
            return Err(SimError::InvalidArgument("balanced function needs n >= 1".into()));
        }
        let set: HashSet<u64> = ones.iter().copied().collect();
        if set.len() != ones.len() || ones.len() != 1 << (n - 1) {
            return Err(SimError::PromiseViolation(format!(
                "balanced subset must hold {} distinct inputs, got {}",
                1usize << (n - 1),
                set.len()
            )));
        }
        if let Some(x) = ones.iter().find(|&&x| x >> n != 0) {
            return Err(SimError::InvalidArgument(format!("input {x} out of range")));
        }
        Self::from_fn(n, 1, |x| set.contains(&x) as u64)
    }

    /// Uniformly random balanced function.
    pub fn random_balanced(n: usize, rng: &mut RngStream) -> Result<Self> {
        let mut inputs: Vec<u64> = (0..1u64 << n).collect();
        rng.shuffle(&mut inputs);
        Self::balanced_from_subset(n, &inputs[..inputs.len() / 2])
    }

    pub fn parity(n: usize) -> Result<Self> {
        Self::from_fn(n, 1, |x| (x.count_ones() & 1) as u64)
    }

    /// `f(x) = a . x mod 2` on `n` bits.
    pub fn bernstein_vazirani(n: usize, a: u64) -> Result<Self> {
        if a >> n != 0 {
            return Err(SimError::InvalidArgument(format!(
                "a = {a:#b} longer than {n} bits"
            )));
        }
        Self::from_fn(n, 1, |x| dot_mod2(a, x) as u64)
    }

    /// 2-to-1 function on `n` bits with `f(x) = f(y)` iff `y = x ^ period`.
    /// Each coset `{x, x ^ period}` gets a distinct label drawn as a random
    /// permutation of `0..2^(n-1)`.
    pub fn simon(n: usize, period: u64, rng: &mut RngStream) -> Result<Self> {
        if period == 0 {
            return Err(SimError::InvalidArgument(
                "Simon period must be nonzero; use random_injective for the 1-to-1 case".into(),
            ));
        }
        if period >> n != 0 || n == 0 {
            return Err(SimError::InvalidArgument(format!(
                "period {period:#b} does not fit in {n} bits"
            )));
        }
        let mut labels: Vec<u64> = (0..1u64 << (n - 1)).collect();
        rng.shuffle(&mut labels);
        let mut table = vec![u64::MAX; 1 << n];
        let mut next = labels.into_iter();
        for x in 0..1u64 << n {
            if table[x as usize] == u64::MAX {
                let label = next.next().expect("one label per coset");
                table[x as usize] = label;
                table[(x ^ period) as usize] = label;
            }
        }
        Self::new(n, n, table)
    }

    /// Random bijection on `n` bits (the zero-period case of Simon's problem).
    pub fn random_injective(n: usize, rng: &mut RngStream) -> Result<Self> {
        let mut table: Vec<u64> = (0..1u64 << n).collect();
        rng.shuffle(&mut table);
        Self::new(n, n.max(1), table)
    }

    /// Which promise, if any, a Boolean function satisfies.
    pub fn promise_kind(&self) -> Option<PromiseKind> {
        if self.n_out != 1 {
            return None;
        }
        let ones = self.table.iter().filter(|&&v| v == 1).count();
        match ones {
            0 => Some(PromiseKind::Constant),
            n if n == self.table.len() => Some(PromiseKind::Constant),
            n if 2 * n == self.table.len() => Some(PromiseKind::Balanced),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.promise_kind() == Some(PromiseKind::Constant)
    }

    pub fn is_balanced(&self) -> bool {
        self.promise_kind() == Some(PromiseKind::Balanced)
    }

    /// Exhaustive check of `f(x) = f(y) <=> y in {x, x ^ period}`.
    pub fn satisfies_simon(&self, period: u64) -> bool {
        if period == 0 || period >> self.n_in != 0 {
            return false;
        }
        let mut seen = std::collections::HashMap::new();
        for (x, &v) in self.table.iter().enumerate() {
            if let Some(prev) = seen.insert(v, x as u64) {
                if prev ^ x as u64 != period {
                    return false;
                }
            }
        }
        self.table
            .iter()
            .enumerate()
            .all(|(x, &v)| self.table[x ^ period as usize] == v)
    }

    pub fn is_bijection(&self) -> bool {
        if self.n_in != self.n_out && !(self.n_in == 0 && self.n_out == 1) {
            return false;
        }
        let set: HashSet<u64> = self.table.iter().copied().collect();
        set.len() == self.table.len()
    }

    /// Parses the truth-table file format: optional `#` comment lines (a
    /// `# qsim-format vN` line must say v1), a header `n_in n_out`, then
    /// `2^n_in` binary output words in ascending input order.
    pub fn parse_truth_table(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut table = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| SimError::Parse {
                line: lineno + 1,
                msg,
            };
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(version) = comment.trim().strip_prefix("qsim-format") {
                    if version.trim() != "v1" {
                        return Err(err(format!("unsupported format version {}", version.trim())));
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            match header {
                None => {
                    let nums: Vec<usize> = line
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| err(format!("bad header token {t:?}"))))
                        .collect::<Result<_>>()?;
                    if nums.len() != 2 {
                        return Err(err("header must be `n_in n_out`".into()));
                    }
                    if nums[0] > MAX_INPUT_BITS {
                        return Err(err(format!("n_in {} exceeds cap", nums[0])));
                    }
                    header = Some((nums[0], nums[1]));
                }
                Some((_, n_out)) => {
                    if line.len() != n_out || !line.bytes().all(|b| b == b'0' || b == b'1') {
                        return Err(err(format!("expected {n_out}-bit binary word, got {line:?}")));
                    }
                    table.push(u64::from_str_radix(line, 2).expect("validated binary"));
                }
            }
        }
        let (n_in, n_out) = header.ok_or(SimError::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        Self::new(n_in, n_out, table)
    }

    pub fn to_truth_table(&self) -> String {
        let mut out = format!("# qsim-format v1\n{} {}\n", self.n_in, self.n_out);
        for v in &self.table {
            let _ = writeln!(out, "{v:0width$b}", width = self.n_out);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// `|x, y> -> |x, y ^ f(x)>`.
    Standard,
    /// `|x> -> |f(x)>` for bijective `f`.
    Minimal,
}

/// A classical function embedded as a unitary basis permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleUnitary {
    kind: OracleKind,
    f: ClassicalFunction,
}

impl OracleUnitary {
    pub fn standard(f: ClassicalFunction) -> Self {
        Self {
            kind: OracleKind::Standard,
            f,
        }
    }

    pub fn minimal(f: ClassicalFunction) -> Result<Self> {
        if !f.is_bijection() {
            return Err(SimError::InvalidFunction(
                "minimal oracle requires a bijection".into(),
            ));
        }
        Ok(Self {
            kind: OracleKind::Minimal,
            f,
        })
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn function(&self) -> &ClassicalFunction {
        &self.f
    }

    /// Qubits the oracle acts on.
    pub fn n_qubits(&self) -> usize {
        match self.kind {
            OracleKind::Standard => self.f.n_in + self.f.n_out,
            OracleKind::Minimal => self.f.n_in,
        }
    }

    /// Image of a basis index; bits above the oracle's register pass through.
    pub fn map_basis(&self, index: usize) -> usize {
        let n_in = self.f.n_in;
        let x = index & ((1 << n_in) - 1);
        let fx = self.f.table[x] as usize;
        match self.kind {
            OracleKind::Standard => index ^ (fx << n_in),
            OracleKind::Minimal => (index & !((1 << n_in) - 1)) | fx,
        }
    }

    /// One query.
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() < self.n_qubits() {
            return Err(SimError::QubitMismatch {
                expected: self.n_qubits(),
                got: state.n_qubits(),
            });
        }
        state.permute_basis(|i| self.map_basis(i));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_oracle_examples() {
        let id = ClassicalFunction::from_fn(1, 1, |x| x).unwrap();
        let u = OracleUnitary::standard(id);
        // |x=1, y=0> -> |1, 1>
        assert_eq!(u.map_basis(0b01), 0b11);

        let zero = OracleUnitary::standard(ClassicalFunction::constant(3, false).unwrap());
        assert!((0..16).all(|i| zero.map_basis(i) == i));

        let modexp = ClassicalFunction::from_fn(4, 4, |x| {
            (0..x).fold(1u64, |acc, _| acc * 7 % 15)
        })
        .unwrap();
        let u = OracleUnitary::standard(modexp);
        // |x=2, y=0> -> |2, 4>
        assert_eq!(u.map_basis(2), 2 | 4 << 4);
    }

    #[test]
    fn minimal_oracle_examples() {
        let id = OracleUnitary::minimal(ClassicalFunction::from_fn(3, 3, |x| x).unwrap()).unwrap();
        assert!((0..8).all(|i| id.map_basis(i) == i));

        let rev = ClassicalFunction::from_fn(3, 3, |x| {
            ((x & 1) << 2) | (x & 2) | (x >> 2 & 1)
        })
        .unwrap();
        assert_eq!(OracleUnitary::minimal(rev).unwrap().map_basis(1), 4);

        let inc = ClassicalFunction::from_fn(3, 3, |x| (x + 1) % 8).unwrap();
        assert_eq!(OracleUnitary::minimal(inc).unwrap().map_basis(7), 0);

        let not_bij = ClassicalFunction::from_fn(3, 3, |x| x / 2).unwrap();
        assert!(OracleUnitary::minimal(not_bij).is_err());
    }

    #[test]
    fn promise_families() {
        let c1 = ClassicalFunction::constant(3, true).unwrap();
        assert!(c1.table().iter().all(|&v| v == 1));
        assert!(c1.is_constant());

        let par = ClassicalFunction::parity(3).unwrap();
        assert_eq!(par.table().iter().filter(|&&v| v == 1).count(), 4);
        assert!(par.is_balanced());

        let sub = ClassicalFunction::balanced_from_subset(3, &[0, 1, 2, 3]).unwrap();
        assert!(sub.is_balanced());
        assert!(ClassicalFunction::balanced_from_subset(3, &[0, 1, 2]).is_err());
        assert!(ClassicalFunction::balanced_from_subset(3, &[0, 1, 2, 2]).is_err());

        let mut rng = RngStream::new(8);
        for n in 1..=8 {
            assert!(ClassicalFunction::random_balanced(n, &mut rng).unwrap().is_balanced());
        }
    }

    #[test]
    fn bernstein_vazirani_functions() {
        let f = ClassicalFunction::bernstein_vazirani(3, 0).unwrap();
        assert!(f.is_constant());
        let f = ClassicalFunction::bernstein_vazirani(3, 0b101).unwrap();
        assert_eq!(f.eval(0b111), 0);
        let f = ClassicalFunction::bernstein_vazirani(2, 0b11).unwrap();
        assert_eq!(f.table(), &[0, 1, 1, 0]);
        assert!(ClassicalFunction::bernstein_vazirani(2, 0b100).is_err());
    }

    #[test]
    fn simon_functions() {
        let mut rng = RngStream::new(1);
        let f = ClassicalFunction::simon(2, 3, &mut rng).unwrap();
        assert_eq!(f.eval(0), f.eval(3));
        assert_eq!(f.eval(1), f.eval(2));
        assert_ne!(f.eval(0), f.eval(1));

        let f = ClassicalFunction::simon(3, 1, &mut rng).unwrap();
        let mut counts = std::collections::HashMap::new();
        for &v in f.table() {
            *counts.entry(v).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 4);
        assert!(counts.values().all(|&c| c == 2));

        assert!(ClassicalFunction::simon(3, 0, &mut rng).is_err());
    }

    #[test]
    fn simon_validator_rejects_flipped_entry() {
        let mut rng = RngStream::new(2);
        for n in 2..=12 {
            let p = 1 + rng.below((1 << n) - 1);
            let f = ClassicalFunction::simon(n, p, &mut rng).unwrap();
            assert!(f.satisfies_simon(p));
            let mut table = f.table().to_vec();
            table[0] ^= 1;
            let broken = ClassicalFunction::new(n, n, table).unwrap();
            assert!(!broken.satisfies_simon(p));
        }
    }

    #[test]
    fn truth_table_round_trip_and_errors() {
        let f = ClassicalFunction::from_fn(3, 2, |x| x % 3).unwrap();
        let text = f.to_truth_table();
        assert!(text.starts_with("# qsim-format v1\n3 2\n00\n01\n10\n00\n"));
        assert_eq!(ClassicalFunction::parse_truth_table(&text).unwrap(), f);

        assert!(ClassicalFunction::parse_truth_table("1 1\n0\n").is_err());
        assert!(ClassicalFunction::parse_truth_table("1 1\n0\n2\n").is_err());
        assert!(ClassicalFunction::parse_truth_table("# qsim-format v2\n1 1\n0\n1\n").is_err());
        assert!(ClassicalFunction::parse_truth_table("").is_err());
    }

    #[test]
    fn table_entries_must_fit() {
        assert!(ClassicalFunction::new(1, 1, vec![0, 2]).is_err());
        assert!(ClassicalFunction::new(2, 1, vec![0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn standard_oracle_is_an_involution_preserving_input(
            n_in in 1usize..5, n_out in 1usize..4, seed in any::<u64>()
        ) {
            let mut rng = RngStream::new(seed);
            let table = (0..1 << n_in).map(|_| rng.below(1 << n_out)).collect();
            let f = ClassicalFunction::new(n_in, n_out, table).unwrap();
            let u = OracleUnitary::standard(f);
            for i in 0..1usize << (n_in + n_out) {
                let j = u.map_basis(i);
                prop_assert_eq!(u.map_basis(j), i);
                prop_assert_eq!(j & ((1 << n_in) - 1), i & ((1 << n_in) - 1));
            }
        }
    }
}
