//! Deutsch, Deutsch-Jozsa, Bernstein-Vazirani and Simon.
//!
//! Every algorithm wraps its oracle in a [`QueryCounter`] so the reported
//! query count is what was actually executed, not a constant.

use crate::error::{Result, SimError};
use crate::oracles::{dot_mod2, ClassicalFunction, OracleUnitary, PromiseKind};
use crate::rng::RngStream;
use crate::simcore::{GateMatrix, StateVector, DEFAULT_QUBIT_CAP};

/// Oracle wrapper that counts applications.
#[derive(Debug)]
pub struct QueryCounter<'a> {
    oracle: &'a OracleUnitary,
    queries: usize,
}

impl<'a> QueryCounter<'a> {
    pub fn new(oracle: &'a OracleUnitary) -> Self {
        Self { oracle, queries: 0 }
    }

    pub fn query(&mut self, state: &mut StateVector) -> Result<()> {
        self.queries += 1;
        self.oracle.apply(state)
    }

    pub fn queries(&self) -> usize {
        self.queries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromiseCheck {
    Validate,
    /// Run on arbitrary inputs; the verdict then carries no guarantee.
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromiseVerdict {
    pub verdict: PromiseKind,
    pub queries_used: usize,
    /// Probability of the outcome that was observed.
    pub outcome_probability: f64,
}

fn hadamard_all(state: &mut StateVector, qubits: std::ops::Range<usize>) -> Result<()> {
    let h = GateMatrix::hadamard();
    for q in qubits {
        state.apply_gate(&h, &[q])?;
    }
    Ok(())
}

/// Final state of the Deutsch-Jozsa circuit before measurement: `n` input
/// qubits followed by one output qubit prepared in `H|1>`.
pub fn deutsch_jozsa_state(f: &ClassicalFunction) -> Result<(StateVector, usize)> {
    if f.n_out() != 1 {
        return Err(SimError::InvalidFunction("expected a Boolean function".into()));
    }
    let n = f.n_in();
    if n + 1 > DEFAULT_QUBIT_CAP {
        return Err(SimError::TooManyQubits {
            requested: n + 1,
            cap: DEFAULT_QUBIT_CAP,
        });
    }
    let oracle = OracleUnitary::standard(f.clone());
    let mut counter = QueryCounter::new(&oracle);
    let mut state = StateVector::new_basis_state(n + 1, 1 << n)?;
    hadamard_all(&mut state, 0..n + 1)?;
    counter.query(&mut state)?;
    hadamard_all(&mut state, 0..n)?;
    Ok((state, counter.queries()))
}

/// Probability that the input register reads all zeros.
pub fn dj_zero_probability(f: &ClassicalFunction) -> Result<f64> {
    let (state, _) = deutsch_jozsa_state(f)?;
    let n = f.n_in();
    let qubits: Vec<usize> = (0..n).collect();
    Ok(state.marginal_probabilities(&qubits)?[0])
}

fn measure_verdict(
    state: &mut StateVector,
    n: usize,
    queries: usize,
    rng: &mut RngStream,
) -> Result<PromiseVerdict> {
    let qubits: Vec<usize> = (0..n).collect();
    let marg = state.marginal_probabilities(&qubits)?;
    let bits = state.measure_subset(&qubits, rng)?;
    let outcome = bits.iter().enumerate().fold(0, |a, (j, &b)| a | (b as usize) << j);
    let verdict = if outcome == 0 {
        PromiseKind::Constant
    } else {
        PromiseKind::Balanced
    };
    Ok(PromiseVerdict {
        verdict,
        queries_used: queries,
        outcome_probability: marg[outcome],
    })
}

/// Deutsch's problem: is `f: {0,1} -> {0,1}` constant or balanced?
pub fn deutsch(f: &ClassicalFunction, rng: &mut RngStream) -> Result<PromiseVerdict> {
    if f.n_in() != 1 || f.n_out() != 1 {
        return Err(SimError::InvalidFunction(
            "Deutsch's algorithm needs a 1-bit to 1-bit function".into(),
        ));
    }
    let (mut state, queries) = deutsch_jozsa_state(f)?;
    measure_verdict(&mut state, 1, queries, rng)
}

pub fn deutsch_jozsa(
    f: &ClassicalFunction,
    check: PromiseCheck,
    rng: &mut RngStream,
) -> Result<PromiseVerdict> {
    if check == PromiseCheck::Validate && f.promise_kind().is_none() {
        return Err(SimError::PromiseViolation(
            "function is neither constant nor balanced".into(),
        ));
    }
    let (mut state, queries) = deutsch_jozsa_state(f)?;
    measure_verdict(&mut state, f.n_in(), queries, rng)
}

/// Deterministic classical queries needed in the worst case: `2^n / 2 + 1`.
pub fn classical_dj_worst_case(n: usize) -> u64 {
    (1u64 << n) / 2 + 1
}

/// Deterministic classical decision, querying inputs in order until either
/// two values differ or more than half agree.
pub fn classical_dj_deterministic(f: &ClassicalFunction) -> (PromiseKind, usize) {
    let first = f.eval(0);
    let needed = classical_dj_worst_case(f.n_in()) as usize;
    for (q, x) in (0..f.table().len()).enumerate() {
        if f.eval(x as u64) != first {
            return (PromiseKind::Balanced, q + 1);
        }
        if q + 1 == needed {
            break;
        }
    }
    (PromiseKind::Constant, needed)
}

/// Classical randomized baseline: `samples` uniform queries, answering
/// Constant if they all agree. Errs only on balanced functions.
pub fn classical_dj_sampling(
    f: &ClassicalFunction,
    samples: usize,
    rng: &mut RngStream,
) -> (PromiseKind, usize) {
    let size = f.table().len() as u64;
    let first = f.eval(rng.below(size));
    for q in 1..samples {
        if f.eval(rng.below(size)) != first {
            return (PromiseKind::Balanced, q + 1);
        }
    }
    (PromiseKind::Constant, samples.max(1))
}

/// Recovers `a` from `f(x) = a . x mod 2` with one query.
pub fn bernstein_vazirani(f: &ClassicalFunction, rng: &mut RngStream) -> Result<(u64, usize)> {
    let (mut state, queries) = deutsch_jozsa_state(f)?;
    let n = f.n_in();
    let qubits: Vec<usize> = (0..n).collect();
    let bits = state.measure_subset(&qubits, rng)?;
    let a = bits.iter().enumerate().fold(0u64, |a, (j, &b)| a | (b as u64) << j);
    Ok((a, queries))
}

/// Linear system `{y . p = 0}` over GF(2), kept in reduced row echelon form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2System {
    width: usize,
    /// Reduced rows keyed by pivot (highest set bit).
    rows: Vec<u64>,
}

impl Gf2System {
    pub fn new(width: usize) -> Self {
        assert!(width <= 64, "GF(2) width {width} > 64");
        Self {
            width,
            rows: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// Adds an equation; returns whether it raised the rank.
    pub fn add_row(&mut self, row: u64) -> Result<bool> {
        if self.width < 64 && row >> self.width != 0 {
            return Err(SimError::RowWidth {
                row,
                width: self.width,
            });
        }
        let mut r = row;
        for &existing in &self.rows {
            let pivot = 63 - existing.leading_zeros();
            if r >> pivot & 1 == 1 {
                r ^= existing;
            }
        }
        if r == 0 {
            return Ok(false);
        }
        let pivot = 63 - r.leading_zeros();
        for existing in &mut self.rows {
            if *existing >> pivot & 1 == 1 {
                *existing ^= r;
            }
        }
        self.rows.push(r);
        self.rows.sort_unstable_by(|a, b| b.cmp(a));
        Ok(true)
    }

    /// Basis of `{p : row . p = 0 for every row}`.
    pub fn nullspace(&self) -> Vec<u64> {
        let pivots: Vec<u32> = self.rows.iter().map(|r| 63 - r.leading_zeros()).collect();
        (0..self.width as u32)
            .filter(|c| !pivots.contains(c))
            .map(|free| {
                // Set the free variable; each pivot variable equals its row's
                // value on the free columns.
                let mut v = 1u64 << free;
                for (row, &pivot) in self.rows.iter().zip(&pivots) {
                    if row >> free & 1 == 1 {
                        v |= 1 << pivot;
                    }
                }
                v
            })
            .collect()
    }

    /// Every vector in the nullspace, including zero.
    pub fn nullspace_elements(&self) -> Vec<u64> {
        let basis = self.nullspace();
        (0..1u64 << basis.len())
            .map(|mask| {
                basis
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .fold(0, |acc, (_, v)| acc ^ v)
            })
            .collect()
    }
}

/// State of Simon's circuit right after the oracle and the (optional)
/// measurement of the output register: `(|x0> + |x0 ^ p>)/sqrt 2` on the
/// input register. Returns the state and the measured output value.
pub fn simon_collapsed_state(
    oracle: &mut QueryCounter<'_>,
    rng: &mut RngStream,
) -> Result<(StateVector, u64)> {
    let f = oracle.oracle.function();
    let n = f.n_in();
    let total = n + f.n_out();
    if total > DEFAULT_QUBIT_CAP {
        return Err(SimError::TooManyQubits {
            requested: total,
            cap: DEFAULT_QUBIT_CAP,
        });
    }
    let mut state = StateVector::new_basis_state(total, 0)?;
    hadamard_all(&mut state, 0..n)?;
    oracle.query(&mut state)?;
    let out: Vec<usize> = (n..total).collect();
    let bits = state.measure_subset(&out, rng)?;
    let value = bits.iter().enumerate().fold(0u64, |a, (j, &b)| a | (b as u64) << j);
    Ok((state, value))
}

/// One run of Simon's circuit; returns `y` with `y . p = 0`.
pub fn simon_sample(oracle: &mut QueryCounter<'_>, rng: &mut RngStream) -> Result<u64> {
    let n = oracle.oracle.function().n_in();
    let (mut state, _) = simon_collapsed_state(oracle, rng)?;
    hadamard_all(&mut state, 0..n)?;
    let qubits: Vec<usize> = (0..n).collect();
    let bits = state.measure_subset(&qubits, rng)?;
    Ok(bits.iter().enumerate().fold(0u64, |a, (j, &b)| a | (b as u64) << j))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimonOutcome {
    pub period: u64,
    pub queries: usize,
    pub samples: Vec<u64>,
}

/// Simon's algorithm for a 2-to-1 function with nonzero hidden period.
/// Samples until the equations reach rank `n - 1`, giving up after `20 n` runs.
pub fn simon(f: &ClassicalFunction, rng: &mut RngStream) -> Result<SimonOutcome> {
    let n = f.n_in();
    if n == 0 || f.n_out() == 0 {
        return Err(SimError::InvalidFunction("Simon needs n >= 1".into()));
    }
    let oracle = OracleUnitary::standard(f.clone());
    let mut counter = QueryCounter::new(&oracle);
    let mut system = Gf2System::new(n);
    let mut samples = Vec::new();
    let cap = 20 * n;
    while system.rank() < n - 1 {
        if counter.queries() >= cap {
            return Err(SimError::SimonCapExceeded { target: n - 1, cap });
        }
        let y = simon_sample(&mut counter, rng)?;
        samples.push(y);
        system.add_row(y)?;
    }
    let period = system
        .nullspace()
        .into_iter()
        .next()
        .expect("rank n-1 leaves a one-dimensional nullspace");
    Ok(SimonOutcome {
        period,
        queries: counter.queries(),
        samples,
    })
}

/// Exact sampling distribution of Simon's `y` register, computed without
/// measurement by marginalizing the final statevector.
pub fn simon_distribution(f: &ClassicalFunction) -> Result<Vec<f64>> {
    let n = f.n_in();
    let total = n + f.n_out();
    let oracle = OracleUnitary::standard(f.clone());
    let mut state = StateVector::new_basis_state(total, 0)?;
    hadamard_all(&mut state, 0..n)?;
    oracle.apply(&mut state)?;
    hadamard_all(&mut state, 0..n)?;
    let qubits: Vec<usize> = (0..n).collect();
    state.marginal_probabilities(&qubits)
}

/// `{y : y . p = 0 mod 2}`.
pub fn dual_subspace(n: usize, p: u64) -> Vec<u64> {
    (0..1u64 << n).filter(|&y| dot_mod2(y, p) == 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deutsch_examples() {
        let mut rng = RngStream::new(0);
        let c0 = ClassicalFunction::constant(1, false).unwrap();
        let v = deutsch(&c0, &mut rng).unwrap();
        assert_eq!(v.verdict, PromiseKind::Constant);
        assert!((v.outcome_probability - 1.0).abs() < 1e-12);
        assert_eq!(v.queries_used, 1);

        let id = ClassicalFunction::from_fn(1, 1, |x| x).unwrap();
        let v = deutsch(&id, &mut rng).unwrap();
        assert_eq!(v.verdict, PromiseKind::Balanced);
        assert!((v.outcome_probability - 1.0).abs() < 1e-12);

        let c1 = ClassicalFunction::constant(1, true).unwrap();
        assert_eq!(deutsch(&c1, &mut rng).unwrap().verdict, PromiseKind::Constant);
        let (s0, _) = deutsch_jozsa_state(&c0).unwrap();
        let (s1, _) = deutsch_jozsa_state(&c1).unwrap();
        let overlap = s0.inner_product(&s1).unwrap();
        assert!((overlap.re + 1.0).abs() < 1e-12, "global sign -1, got {overlap}");

        let wide = ClassicalFunction::constant(2, false).unwrap();
        assert!(deutsch(&wide, &mut rng).is_err());
    }

    #[test]
    fn deutsch_first_qubit_holds_xor() {
        for table in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let f = ClassicalFunction::new(1, 1, table.to_vec()).unwrap();
            let (s, _) = deutsch_jozsa_state(&f).unwrap();
            let p = s.marginal_probabilities(&[0]).unwrap();
            let xor = (table[0] ^ table[1]) as usize;
            assert!((p[xor] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dj_probabilities() {
        let c = ClassicalFunction::constant(4, true).unwrap();
        assert!((dj_zero_probability(&c).unwrap() - 1.0).abs() < 1e-9);
        let p = ClassicalFunction::parity(4).unwrap();
        assert!(dj_zero_probability(&p).unwrap() < 1e-9);
        assert_eq!(classical_dj_worst_case(4), 9);
    }

    #[test]
    fn dj_promise_validation_is_opt_out() {
        let mut rng = RngStream::new(0);
        let f = ClassicalFunction::new(2, 1, vec![1, 0, 0, 0]).unwrap();
        assert!(matches!(
            deutsch_jozsa(&f, PromiseCheck::Validate, &mut rng),
            Err(SimError::PromiseViolation(_))
        ));
        assert!(deutsch_jozsa(&f, PromiseCheck::Skip, &mut rng).is_ok());
    }

    #[test]
    fn classical_baselines() {
        let c = ClassicalFunction::constant(4, false).unwrap();
        assert_eq!(classical_dj_deterministic(&c), (PromiseKind::Constant, 9));
        let b = ClassicalFunction::balanced_from_subset(3, &[4, 5, 6, 7]).unwrap();
        assert_eq!(classical_dj_deterministic(&b), (PromiseKind::Balanced, 5));
        let mut rng = RngStream::new(3);
        assert_eq!(classical_dj_sampling(&c, 5, &mut rng).0, PromiseKind::Constant);
    }

    #[test]
    fn bernstein_vazirani_examples() {
        let mut rng = RngStream::new(1);
        let f = ClassicalFunction::bernstein_vazirani(3, 0).unwrap();
        assert_eq!(bernstein_vazirani(&f, &mut rng).unwrap(), (0, 1));
        let f = ClassicalFunction::bernstein_vazirani(3, 0b101).unwrap();
        let (state, _) = deutsch_jozsa_state(&f).unwrap();
        let p = state.marginal_probabilities(&[0, 1, 2]).unwrap();
        assert!((p[0b101] - 1.0).abs() < 1e-12);
        assert_eq!(bernstein_vazirani(&f, &mut rng).unwrap(), (0b101, 1));
    }

    #[test]
    fn gf2_examples() {
        let sys = Gf2System::new(3);
        assert_eq!(sys.nullspace().len(), 3);

        let mut sys = Gf2System::new(3);
        // (1,1,0) and (0,1,1) with bit i = component i+1
        assert!(sys.add_row(0b011).unwrap());
        assert!(sys.add_row(0b110).unwrap());
        let mut elems = sys.nullspace_elements();
        elems.sort_unstable();
        assert_eq!(elems, vec![0b000, 0b111]);

        assert!(!sys.add_row(0b101).unwrap());
        assert_eq!(sys.rank(), 2);
        assert!(matches!(sys.add_row(0b1000), Err(SimError::RowWidth { .. })));
    }

    #[test]
    fn gf2_nullspace_brute_force() {
        let mut rng = RngStream::new(77);
        for _ in 0..200 {
            let width = 1 + rng.below(8) as usize;
            let mut sys = Gf2System::new(width);
            let mut raw = Vec::new();
            for _ in 0..rng.below(width as u64 + 2) {
                let r = rng.below(1 << width);
                raw.push(r);
                sys.add_row(r).unwrap();
            }
            let mut expect: Vec<u64> = (0..1u64 << width)
                .filter(|&p| raw.iter().all(|&r| dot_mod2(r, p) == 0))
                .collect();
            let mut got = sys.nullspace_elements();
            expect.sort_unstable();
            got.sort_unstable();
            assert_eq!(got, expect);
            assert_eq!(sys.rank() + sys.nullspace().len(), width);
        }
    }

    #[test]
    fn simon_collapse_matches_coset_state() {
        let mut rng = RngStream::new(5);
        let p = 0b101;
        let f = ClassicalFunction::simon(3, p, &mut rng).unwrap();
        let oracle = OracleUnitary::standard(f.clone());
        let mut counter = QueryCounter::new(&oracle);
        let (state, label) = simon_collapsed_state(&mut counter, &mut rng).unwrap();
        let coset: Vec<u64> = (0..8).filter(|&x| f.eval(x) == label).collect();
        assert_eq!(coset.len(), 2);
        assert_eq!(coset[0] ^ coset[1], p);
        let probs = state.marginal_probabilities(&[0, 1, 2]).unwrap();
        for x in 0..8u64 {
            let expect = if coset.contains(&x) { 0.5 } else { 0.0 };
            assert!((probs[x as usize] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn simon_examples() {
        let mut rng = RngStream::new(9);
        let f = ClassicalFunction::simon(3, 5, &mut rng).unwrap();
        let dist = simon_distribution(&f).unwrap();
        let dual = dual_subspace(3, 5);
        for (y, p) in dist.iter().enumerate() {
            let expect = if dual.contains(&(y as u64)) { 0.25 } else { 0.0 };
            assert!((p - expect).abs() < 1e-12);
        }
        let out = simon(&f, &mut rng).unwrap();
        assert_eq!(out.period, 5);
        assert!(out.samples.iter().all(|&y| dot_mod2(y, 5) == 0));
        assert_eq!(out.queries, out.samples.len());

        let f = ClassicalFunction::simon(2, 3, &mut rng).unwrap();
        assert_eq!(simon(&f, &mut rng).unwrap().period, 3);
    }

    #[test]
    fn simon_mean_queries_at_n6() {
        let rng = RngStream::new(31);
        let n = 6;
        let mut total = 0;
        for run in 0..100 {
            let mut child = rng.split(run);
            let p = 1 + child.below((1 << n) - 1);
            let f = ClassicalFunction::simon(n, p, &mut child).unwrap();
            let out = simon(&f, &mut child).unwrap();
            assert_eq!(out.period, p);
            total += out.queries;
        }
        let mean = total as f64 / 100.0;
        assert!(mean <= 2.0 * (n as f64 - 1.0), "mean {mean}");
    }
}
