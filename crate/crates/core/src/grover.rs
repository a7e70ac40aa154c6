//! Grover search: marked-state reflection, diffusion, and the analytic
//! rotation-angle model the simulation is checked against.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::rng::RngStream;
use crate::simcore::{GateMatrix, StateVector, DEFAULT_QUBIT_CAP};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroverInstance {
    n_qubits: usize,
    marked: Vec<usize>,
}

impl GroverInstance {
    pub fn new(n_qubits: usize, mut marked: Vec<usize>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > DEFAULT_QUBIT_CAP {
            return Err(SimError::TooManyQubits {
                requested: n_qubits,
                cap: DEFAULT_QUBIT_CAP,
            });
        }
        marked.sort_unstable();
        marked.dedup();
        if marked.is_empty() {
            return Err(SimError::InvalidArgument("marked set must be nonempty".into()));
        }
        if let Some(&bad) = marked.iter().find(|&&m| m >> n_qubits != 0) {
            return Err(SimError::IndexOutOfRange {
                index: bad,
                n_qubits,
            });
        }
        Ok(Self { n_qubits, marked })
    }

    /// `m` distinct marked items drawn uniformly.
    pub fn random(n_qubits: usize, m: usize, rng: &mut RngStream) -> Result<Self> {
        let size = 1usize << n_qubits.min(63);
        if m == 0 || m > size {
            return Err(SimError::InvalidArgument(format!(
                "cannot mark {m} of {size} items"
            )));
        }
        let mut all: Vec<usize> = (0..size).collect();
        rng.shuffle(&mut all);
        all.truncate(m);
        Self::new(n_qubits, all)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn search_space(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn marked(&self) -> &[usize] {
        &self.marked
    }

    pub fn is_marked(&self, x: usize) -> bool {
        self.marked.binary_search(&x).is_ok()
    }
}

/// `U = 1 - 2 sum_{x in marked} |x><x|`.
pub fn grover_oracle_apply(state: &mut StateVector, marked: &[usize]) {
    let amps = state.amplitudes_mut();
    for &x in marked {
        amps[x] = -amps[x];
    }
}

/// `U = 2|psi><psi| - 1` with `|psi>` uniform, as a rank-one update.
pub fn diffusion_apply(state: &mut StateVector) {
    let amps = state.amplitudes_mut();
    let mean: Complex64 = amps.iter().sum::<Complex64>() / amps.len() as f64;
    for a in amps.iter_mut() {
        *a = 2.0 * mean - *a;
    }
}

/// The same reflection built from Hadamard layers around `2|0><0| - 1`.
pub fn diffusion_via_hadamards(state: &mut StateVector) -> Result<()> {
    let h = GateMatrix::hadamard();
    let n = state.n_qubits();
    for q in 0..n {
        state.apply_gate(&h, &[q])?;
    }
    for a in state.amplitudes_mut().iter_mut().skip(1) {
        *a = -*a;
    }
    for q in 0..n {
        state.apply_gate(&h, &[q])?;
    }
    Ok(())
}

/// One Grover step `G = U_psi U_marked`; one oracle query.
pub fn grover_step(state: &mut StateVector, marked: &[usize]) {
    grover_oracle_apply(state, marked);
    diffusion_apply(state);
}

/// `phi` with `sin phi = sqrt(M/N)`.
pub fn rotation_angle(n_items: usize, m_marked: usize) -> f64 {
    (m_marked as f64 / n_items as f64).sqrt().asin()
}

/// `sin^2((2k + 1) phi)`.
pub fn grover_success_prob(n_items: usize, m_marked: usize, k: usize) -> f64 {
    let phi = rotation_angle(n_items, m_marked);
    ((2 * k + 1) as f64 * phi).sin().powi(2)
}

/// `round(pi/4 sqrt(N/M) - 1/2)`.
pub fn optimal_iterations(n_items: usize, m_marked: usize) -> usize {
    let k = PI / 4.0 * (n_items as f64 / m_marked as f64).sqrt() - 0.5;
    k.round().max(0.0) as usize
}

/// Upper end of the random iteration range for unknown `M`: `floor(pi sqrt(N) / 4)`.
pub fn random_iteration_bound(n_items: usize) -> usize {
    (PI * (n_items as f64).sqrt() / 4.0).floor() as usize
}

/// Expected success of the unknown-`M` strategy, averaging over uniform `k`.
pub fn unknown_m_expected_success(n_items: usize, m_marked: usize) -> f64 {
    let kmax = random_iteration_bound(n_items);
    (0..=kmax)
        .map(|k| grover_success_prob(n_items, m_marked, k))
        .sum::<f64>()
        / (kmax + 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iterations {
    Fixed(usize),
    Auto,
    /// Uniform in `[0, floor(pi sqrt(N)/4)]`, for unknown `M`.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroverReport {
    pub found: usize,
    pub success: bool,
    pub iterations: usize,
    pub oracle_queries: usize,
    /// Probability mass on the marked set just before measurement.
    pub final_success_prob: f64,
}

/// Runs `k` Grover steps from the uniform state without measuring.
pub fn grover_state(instance: &GroverInstance, k: usize) -> Result<StateVector> {
    let mut state = StateVector::uniform(instance.n_qubits)?;
    for _ in 0..k {
        grover_step(&mut state, &instance.marked);
    }
    Ok(state)
}

fn marked_mass(state: &StateVector, marked: &[usize]) -> f64 {
    marked.iter().map(|&x| state.amplitudes()[x].norm_sqr()).sum()
}

/// Simulated marked-set probability after each of `0..=k_max` iterations.
pub fn success_curve(instance: &GroverInstance, k_max: usize) -> Result<Vec<f64>> {
    let mut state = StateVector::uniform(instance.n_qubits)?;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(marked_mass(&state, &instance.marked));
    for _ in 0..k_max {
        grover_step(&mut state, &instance.marked);
        out.push(marked_mass(&state, &instance.marked));
    }
    Ok(out)
}

pub fn grover_search(
    instance: &GroverInstance,
    iterations: Iterations,
    rng: &mut RngStream,
) -> Result<GroverReport> {
    let n_items = instance.search_space();
    let m = instance.marked.len();
    if m >= n_items {
        return Err(SimError::InvalidArgument(format!(
            "{m} marked of {n_items} items: need M < N"
        )));
    }
    let k = match iterations {
        Iterations::Fixed(k) => k,
        Iterations::Auto => optimal_iterations(n_items, m),
        Iterations::Random => rng.below(random_iteration_bound(n_items) as u64 + 1) as usize,
    };
    let mut state = StateVector::uniform(instance.n_qubits)?;
    let mut queries = 0;
    for _ in 0..k {
        grover_oracle_apply(&mut state, &instance.marked);
        queries += 1;
        diffusion_apply(&mut state);
    }
    let final_success_prob = marked_mass(&state, &instance.marked);
    let found = state.measure_all(rng);
    Ok(GroverReport {
        found,
        success: instance.is_marked(found),
        iterations: k,
        oracle_queries: queries,
        final_success_prob,
    })
}

/// Grover with `M` hidden: random iteration count per trial.
pub fn grover_unknown_m(instance: &GroverInstance, rng: &mut RngStream) -> Result<GroverReport> {
    grover_search(instance, Iterations::Random, rng)
}

/// Norm of the component of `state` outside
/// `span{uniform over marked, uniform over unmarked}`.
pub fn plane_residual(state: &StateVector, marked: &[usize]) -> f64 {
    let amps = state.amplitudes();
    let is_marked = |x: usize| marked.binary_search(&x).is_ok();
    let (mut sum_m, mut sum_u) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (x, a) in amps.iter().enumerate() {
        if is_marked(x) {
            sum_m += a;
        } else {
            sum_u += a;
        }
    }
    let mean_m = sum_m / marked.len() as f64;
    let mean_u = sum_u / (amps.len() - marked.len()).max(1) as f64;
    amps.iter()
        .enumerate()
        .map(|(x, a)| (a - if is_marked(x) { mean_m } else { mean_u }).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_flips_only_marked() {
        let mut s = StateVector::new_basis_state(2, 3).unwrap();
        grover_oracle_apply(&mut s, &[3]);
        assert_eq!(s.amplitudes()[3], Complex64::new(-1.0, 0.0));
        let mut s = StateVector::new_basis_state(2, 1).unwrap();
        grover_oracle_apply(&mut s, &[3]);
        assert_eq!(s.amplitudes()[1], Complex64::new(1.0, 0.0));
        let mut rng = RngStream::new(1);
        let start = StateVector::random(3, &mut rng).unwrap();
        let mut s = start.clone();
        grover_oracle_apply(&mut s, &[2, 5]);
        grover_oracle_apply(&mut s, &[2, 5]);
        assert_eq!(s, start);
    }

    #[test]
    fn diffusion_properties() {
        let psi = StateVector::uniform(3).unwrap();
        let mut s = psi.clone();
        diffusion_apply(&mut s);
        assert!(s.max_abs_diff(&psi) < 1e-14);

        // |0> - |1> is orthogonal to the uniform state
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(h, 0.0);
        amps[1] = Complex64::new(-h, 0.0);
        let orth = StateVector::from_amplitudes(amps).unwrap();
        let mut s = orth.clone();
        diffusion_apply(&mut s);
        for (a, b) in s.amplitudes().iter().zip(orth.amplitudes()) {
            assert!((a + b).norm() < 1e-14);
        }
    }

    #[test]
    fn diffusion_matches_dense_matrix_and_circuit() {
        let mut rng = RngStream::new(4);
        let start = StateVector::random(2, &mut rng).unwrap();
        // 2J/4 - I
        let mut expect = [Complex64::new(0.0, 0.0); 4];
        for (r, e) in expect.iter_mut().enumerate() {
            for c in 0..4 {
                let m = 0.5 - if r == c { 1.0 } else { 0.0 };
                *e += m * start.amplitudes()[c];
            }
        }
        let mut s = start.clone();
        diffusion_apply(&mut s);
        for (a, b) in s.amplitudes().iter().zip(expect) {
            assert!((a - b).norm() < 1e-14);
        }
        let mut c = start.clone();
        diffusion_via_hadamards(&mut c).unwrap();
        assert!(c.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(optimal_iterations(1024, 1), 25);
        assert_eq!(optimal_iterations(4, 1), 1);
        assert_eq!(optimal_iterations(256, 4), 6);
        assert!(grover_success_prob(256, 4, 6) >= 0.99);
    }

    #[test]
    fn analytic_examples() {
        assert!((grover_success_prob(16, 3, 0) - 3.0 / 16.0).abs() < 1e-15);
        assert!((grover_success_prob(4, 1, 1) - 1.0).abs() < 1e-12);
        let k = optimal_iterations(64, 1);
        assert!(1.0 - grover_success_prob(64, 1, k) <= 1.0 / 64.0);
    }

    #[test]
    fn n4_single_iteration_is_exact() {
        let inst = GroverInstance::new(2, vec![2]).unwrap();
        let mut rng = RngStream::new(3);
        let r = grover_search(&inst, Iterations::Fixed(1), &mut rng).unwrap();
        assert!((r.final_success_prob - 1.0).abs() < 1e-9);
        assert!(r.success);
        assert_eq!(r.found, 2);
        assert_eq!(r.oracle_queries, 1);
    }

    #[test]
    fn simulation_equals_rotation_formula() {
        let mut rng = RngStream::new(12);
        for n in 2..=8 {
            let size = 1 << n;
            for m in [1, 2, size / 4] {
                let inst = GroverInstance::random(n, m, &mut rng).unwrap();
                let kopt = optimal_iterations(size, m);
                let curve = success_curve(&inst, 2 * kopt).unwrap();
                for (k, p) in curve.iter().enumerate() {
                    assert!((p - grover_success_prob(size, m, k)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn overshoot_and_plane() {
        let inst = GroverInstance::new(8, vec![17, 200]).unwrap();
        let kopt = optimal_iterations(256, 2);
        let curve = success_curve(&inst, 2 * kopt).unwrap();
        assert!(curve[2 * kopt] < curve[kopt]);
        let mut s = StateVector::uniform(8).unwrap();
        for _ in 0..2 * kopt {
            grover_step(&mut s, inst.marked());
            assert!(plane_residual(&s, inst.marked()) < 1e-9);
        }
    }

    #[test]
    fn instance_validation() {
        assert!(GroverInstance::new(3, vec![]).is_err());
        assert!(GroverInstance::new(3, vec![8]).is_err());
        let full = GroverInstance::new(1, vec![0, 1]).unwrap();
        let mut rng = RngStream::new(0);
        assert!(grover_search(&full, Iterations::Auto, &mut rng).is_err());
    }

    #[test]
    fn unknown_m_band() {
        let mut rng = RngStream::new(99);
        for m in [1, 16] {
            let inst = GroverInstance::random(8, m, &mut rng).unwrap();
            let trials = 1000;
            let wins = (0..trials)
                .filter(|&t| {
                    let mut r = rng.split(t);
                    grover_unknown_m(&inst, &mut r).unwrap().success
                })
                .count();
            let freq = wins as f64 / trials as f64;
            let expect = unknown_m_expected_success(256, m);
            assert!((0.3..=0.7).contains(&freq), "M={m}: {freq}");
            assert!((freq - expect).abs() < 0.05, "M={m}: {freq} vs {expect}");
        }
    }
}
