//! Adiabatic interpolation `H(s) = (1 - s) H0 + s HT`, `s = t/T`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_dense_cap, Hamiltonian, HermitianEigen, LocalHamiltonian, LocalTerm};
use crate::error::{Result, SimError};
use crate::simcore::StateVector;

/// Allowed `| ||psi||^2 - 1 |` per integration step before giving up.
pub const DRIFT_BUDGET: f64 = 1e-8;
/// Eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;
const REFINE_TOLERANCE: f64 = 1e-4;

/// `H0 = sum_i (1 - X_i)/2`; ground state is the uniform superposition.
pub fn default_initial_hamiltonian(n_qubits: usize) -> Result<LocalHamiltonian> {
    let half = Complex64::new(0.5, 0.0);
    let m = DMatrix::from_row_slice(2, 2, &[half, -half, -half, half]);
    let terms = (0..n_qubits)
        .map(|q| LocalTerm::new(vec![q], m.clone()))
        .collect::<Result<_>>()?;
    LocalHamiltonian::new(n_qubits, terms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticSchedule {
    pub total_time: f64,
    /// `None` picks `max(1000, ceil(200 T ||H||))`.
    pub steps: Option<usize>,
}

impl AdiabaticSchedule {
    /// `T = 0` is allowed and means the sudden limit.
    pub fn new(total_time: f64) -> Result<Self> {
        if !(total_time >= 0.0 && total_time.is_finite()) {
            return Err(SimError::InvalidArgument(format!(
                "run time must be finite and >= 0, got {total_time}"
            )));
        }
        Ok(Self {
            total_time,
            steps: None,
        })
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(SimError::InvalidArgument("step count must be >= 1".into()));
        }
        self.steps = Some(steps);
        Ok(self)
    }

    pub fn step_count(&self, norm: f64) -> usize {
        self.steps
            .unwrap_or_else(|| 1000.max((200.0 * self.total_time * norm).ceil() as usize))
    }
}

#[derive(Debug, Clone)]
pub struct AdiabaticOutcome {
    pub state: StateVector,
    /// Probability on the ground manifold of `HT`.
    pub success_prob: f64,
    pub steps: usize,
    pub max_drift: f64,
}

fn check_pair(h0: &Hamiltonian, ht: &Hamiltonian) -> Result<usize> {
    if h0.n_qubits() != ht.n_qubits() {
        return Err(SimError::QubitMismatch {
            expected: h0.n_qubits(),
            got: ht.n_qubits(),
        });
    }
    Ok(h0.n_qubits())
}

/// Ground state of `h`. Above the dense cap only the default `H0` is
/// recognised (its ground state is known in closed form).
pub fn ground_state(h: &Hamiltonian) -> Result<StateVector> {
    let n = h.n_qubits();
    if let Hamiltonian::Local(local) = h {
        if n > super::DENSE_QUBIT_CAP && *local == default_initial_hamiltonian(n)? {
            return StateVector::uniform(n);
        }
    }
    let eig = HermitianEigen::new(&h.to_dense()?);
    StateVector::from_unnormalized(eig.vectors.column(0).iter().copied().collect())
}

/// Total probability of `state` on the ground manifold of `h`.
pub fn ground_probability(h: &Hamiltonian, state: &StateVector) -> Result<f64> {
    if let Hamiltonian::Diagonal(p) = h {
        let probs = state.probabilities();
        return Ok(p.ground_states().iter().map(|&z| probs[z]).sum());
    }
    let eig = HermitianEigen::new(&h.to_dense()?);
    let psi = DVector::from_column_slice(state.amplitudes());
    Ok(eig
        .manifold(0, DEGENERACY_TOLERANCE)
        .into_iter()
        .map(|j| eig.vectors.column(j).dotc(&psi).norm_sqr())
        .sum())
}

/// Integrates `i d/dt psi = H(t/T) psi` with classical RK4 and returns the
/// final state and the largest per-step norm drift.
fn integrate(
    h0: &Hamiltonian,
    ht: &Hamiltonian,
    schedule: &AdiabaticSchedule,
    mut psi: Vec<Complex64>,
) -> Result<(Vec<Complex64>, usize, f64)> {
    let norm = h0.norm_bound().max(ht.norm_bound());
    let steps = schedule.step_count(norm);
    let total = schedule.total_time;
    let dt = total / steps as f64;
    let dim = psi.len();
    let minus_i = Complex64::new(0.0, -1.0);

    // f(s, v) = -i H(s) v
    let deriv = |s: f64, v: &[Complex64], out: &mut [Complex64]| -> Result<()> {
        out.fill(Complex64::new(0.0, 0.0));
        h0.accumulate(v, out, minus_i * (1.0 - s))?;
        ht.accumulate(v, out, minus_i * s)
    };

    let mut k = [vec![Complex64::new(0.0, 0.0); dim], vec![Complex64::new(0.0, 0.0); dim],
        vec![Complex64::new(0.0, 0.0); dim], vec![Complex64::new(0.0, 0.0); dim]];
    let mut tmp = vec![Complex64::new(0.0, 0.0); dim];
    let mut max_drift = 0.0f64;
    if total == 0.0 {
        return Ok((psi, steps, 0.0));
    }
    for step in 0..steps {
        let s0 = step as f64 / steps as f64;
        let sh = (step as f64 + 0.5) / steps as f64;
        let s1 = (step + 1) as f64 / steps as f64;
        deriv(s0, &psi, &mut k[0])?;
        for (t, (p, d)) in tmp.iter_mut().zip(psi.iter().zip(&k[0])) {
            *t = p + d * (dt / 2.0);
        }
        deriv(sh, &tmp, &mut k[1])?;
        for (t, (p, d)) in tmp.iter_mut().zip(psi.iter().zip(&k[1])) {
            *t = p + d * (dt / 2.0);
        }
        deriv(sh, &tmp, &mut k[2])?;
        for (t, (p, d)) in tmp.iter_mut().zip(psi.iter().zip(&k[2])) {
            *t = p + d * dt;
        }
        deriv(s1, &tmp, &mut k[3])?;
        for i in 0..dim {
            psi[i] += (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]) * (dt / 6.0);
        }
        let n2: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        let drift = (n2 - 1.0).abs();
        if drift > DRIFT_BUDGET || !drift.is_finite() {
            return Err(SimError::NormDrift {
                drift,
                budget: DRIFT_BUDGET,
                step,
            });
        }
        max_drift = max_drift.max(drift);
        let scale = 1.0 / n2.sqrt();
        psi.iter_mut().for_each(|a| *a *= scale);
    }
    Ok((psi, steps, max_drift))
}

/// Starts in the ground state of `h0` and follows the linear schedule to `ht`.
pub fn adiabatic_run(
    h0: &Hamiltonian,
    ht: &Hamiltonian,
    schedule: &AdiabaticSchedule,
) -> Result<AdiabaticOutcome> {
    check_pair(h0, ht)?;
    let start = ground_state(h0)?;
    let (amps, steps, max_drift) = integrate(h0, ht, schedule, start.into_amplitudes())?;
    let state = StateVector::from_amplitudes(amps)?;
    let success_prob = ground_probability(ht, &state)?;
    Ok(AdiabaticOutcome {
        state,
        success_prob,
        steps,
        max_drift,
    })
}

/// Runs `h0 -> ht` and back along the same schedule; returns the overlap with
/// the ground manifold of `h0`.
pub fn round_trip_check(
    h0: &Hamiltonian,
    ht: &Hamiltonian,
    schedule: &AdiabaticSchedule,
) -> Result<f64> {
    let forward = adiabatic_run(h0, ht, schedule)?;
    let (amps, _, _) = integrate(ht, h0, schedule, forward.state.into_amplitudes())?;
    ground_probability(h0, &StateVector::from_amplitudes(amps)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub s: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    /// `|| P_1 (HT - H0) |E0> ||` with `P_1` the first-excited eigenprojector.
    pub matrix_element: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub samples: Vec<GapSample>,
    /// Smallest gap, after refinement around the grid minimum.
    pub delta_min: f64,
    pub s_min: f64,
    pub theta: f64,
    /// Some `s` has a (numerically) degenerate ground level.
    pub degenerate: bool,
}

impl GapReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,e0,e1,gap\n");
        for g in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", g.s, g.e0, g.e1, g.gap));
        }
        out
    }
}

fn sample_at(h0: &DMatrix<Complex64>, ht: &DMatrix<Complex64>, s: f64) -> GapSample {
    let h = h0 * Complex64::new(1.0 - s, 0.0) + ht * Complex64::new(s, 0.0);
    let eig = HermitianEigen::new(&h);
    let (e0, e1) = (eig.values[0], eig.values[1]);
    let pushed = (ht - h0) * eig.vectors.column(0);
    let matrix_element = eig
        .manifold(1, DEGENERACY_TOLERANCE)
        .into_iter()
        .map(|j| eig.vectors.column(j).dotc(&pushed).norm_sqr())
        .sum::<f64>()
        .sqrt();
    GapSample {
        s,
        e0,
        e1,
        gap: (e1 - e0).max(0.0),
        matrix_element,
    }
}

/// Eigensolves `H(s)` on `samples` uniform points of `[0, 1]`, then refines
/// the minimum gap by golden-section search between the neighbouring points.
pub fn gap_scan(h0: &Hamiltonian, ht: &Hamiltonian, samples: usize) -> Result<GapReport> {
    let n = check_pair(h0, ht)?;
    check_dense_cap(n)?;
    if samples < 2 {
        return Err(SimError::InvalidArgument("gap scan needs >= 2 samples".into()));
    }
    if n == 0 {
        return Err(SimError::EmptyQubitList);
    }
    let (d0, dt) = (h0.to_dense()?, ht.to_dense()?);
    let grid: Vec<GapSample> = (0..samples)
        .into_par_iter()
        .map(|i| sample_at(&d0, &dt, i as f64 / (samples - 1) as f64))
        .collect();

    let imin = (0..grid.len())
        .min_by(|&a, &b| grid[a].gap.total_cmp(&grid[b].gap))
        .unwrap_or(0);
    let mut best = grid[imin];
    let mut theta = grid.iter().fold(0.0f64, |m, g| m.max(g.matrix_element));
    let (mut lo, mut hi) = (
        grid[imin.saturating_sub(1)].s,
        grid[(imin + 1).min(grid.len() - 1)].s,
    );
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = sample_at(&d0, &dt, hi - ratio * (hi - lo));
    let mut b = sample_at(&d0, &dt, lo + ratio * (hi - lo));
    while hi - lo > REFINE_TOLERANCE {
        for g in [a, b] {
            theta = theta.max(g.matrix_element);
            if g.gap < best.gap {
                best = g;
            }
        }
        if a.gap < b.gap {
            hi = b.s;
            b = a;
            a = sample_at(&d0, &dt, hi - ratio * (hi - lo));
        } else {
            lo = a.s;
            a = b;
            b = sample_at(&d0, &dt, lo + ratio * (hi - lo));
        }
    }

    let degenerate = grid.iter().any(|g| g.gap < DEGENERACY_TOLERANCE)
        || best.gap < DEGENERACY_TOLERANCE;
    Ok(GapReport {
        samples: grid,
        delta_min: best.gap,
        s_min: best.s,
        theta,
        degenerate,
    })
}

/// `T* = Theta / (Delta^2 eps)`: a run at `T >= T*` is guaranteed
/// `p >= 1 - eps^2`.
pub fn adiabatic_bound_time(report: &GapReport, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SimError::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if report.delta_min < DEGENERACY_TOLERANCE {
        return Err(SimError::ZeroGap);
    }
    Ok(report.theta / (report.delta_min * report.delta_min * epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ProblemHamiltonian;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn h0(n: usize) -> Hamiltonian {
        Hamiltonian::Local(default_initial_hamiltonian(n).unwrap())
    }

    fn grover(n: usize, marked: &[usize]) -> Hamiltonian {
        Hamiltonian::Diagonal(ProblemHamiltonian::grover_cost(n, marked).unwrap())
    }

    #[test]
    fn initial_hamiltonian_spectrum() {
        let eig = HermitianEigen::new(&h0(1).to_dense().unwrap());
        assert!(eig.values[0].abs() < 1e-12);
        let g = ground_state(&h0(1)).unwrap();
        assert!((g.fidelity(&StateVector::uniform(1).unwrap()).unwrap() - 1.0).abs() < 1e-12);

        let eig = HermitianEigen::new(&h0(3).to_dense().unwrap());
        assert!(eig.values[0].abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
        let e = crate::dynamics::energy(&h0(3), &StateVector::uniform(3).unwrap()).unwrap();
        assert!(e.abs() < 1e-12);
    }

    #[test]
    fn sudden_limit_keeps_uniform_state() {
        let out = adiabatic_run(&h0(2), &grover(2, &[2]), &AdiabaticSchedule::new(0.0).unwrap())
            .unwrap();
        assert!((out.success_prob - 0.25).abs() < 1e-12);
    }

    #[test]
    fn stationary_when_target_is_initial() {
        let out =
            adiabatic_run(&h0(2), &h0(2), &AdiabaticSchedule::new(5.0).unwrap()).unwrap();
        assert!((out.success_prob - 1.0).abs() < 1e-9);
        assert!(out.max_drift < DRIFT_BUDGET);
    }

    #[test]
    fn too_few_steps_is_an_error() {
        let sched = AdiabaticSchedule::new(50.0).unwrap().with_steps(2).unwrap();
        assert!(matches!(
            adiabatic_run(&h0(2), &grover(2, &[1]), &sched),
            Err(SimError::NormDrift { .. })
        ));
        assert!(AdiabaticSchedule::new(-1.0).is_err());
        assert!(AdiabaticSchedule::new(1.0).unwrap().with_steps(0).is_err());
    }

    #[test]
    fn integrator_converges() {
        let (a, b) = (h0(2), grover(2, &[3]));
        let coarse = AdiabaticSchedule::new(6.0).unwrap();
        let n = coarse.step_count(a.norm_bound().max(b.norm_bound()));
        let fine = coarse.with_steps(2 * n).unwrap();
        let p1 = adiabatic_run(&a, &b, &coarse).unwrap().success_prob;
        let p2 = adiabatic_run(&a, &b, &fine).unwrap().success_prob;
        assert!((p1 - p2).abs() < 1e-6, "{p1} {p2}");
    }

    #[test]
    fn constant_gap_when_hamiltonians_agree() {
        let r = gap_scan(&h0(2), &h0(2), 201).unwrap();
        assert!(r.samples.iter().all(|g| (g.gap - 1.0).abs() < 1e-10));
        assert!(r.theta.abs() < 1e-10);
        assert!(!r.degenerate);
    }

    #[test]
    fn single_qubit_gap_closed_form() {
        let z = Hamiltonian::Local(
            LocalHamiltonian::new(
                1,
                vec![LocalTerm::new(
                    vec![0],
                    DMatrix::from_diagonal(&DVector::from_vec(vec![
                        Complex64::new(0.0, 0.0),
                        Complex64::new(1.0, 0.0),
                    ])),
                )
                .unwrap()],
            )
            .unwrap(),
        );
        let r = gap_scan(&h0(1), &z, 201).unwrap();
        for g in &r.samples {
            let expect = ((1.0 - g.s).powi(2) + g.s * g.s).sqrt();
            assert!((g.gap - expect).abs() < 1e-10);
        }
        assert!((r.delta_min - FRAC_1_SQRT_2).abs() < 1e-10);
        assert!((r.s_min - 0.5).abs() < 1e-4);
    }

    #[test]
    fn endpoints_match_direct_eigensolves_and_theta_is_bounded() {
        let (a, b) = (h0(3), grover(3, &[6]));
        let r = gap_scan(&a, &b, 201).unwrap();
        let e_a = HermitianEigen::new(&a.to_dense().unwrap()).values;
        let e_b = HermitianEigen::new(&b.to_dense().unwrap()).values;
        assert!((r.samples[0].e0 - e_a[0]).abs() < 1e-10);
        assert!((r.samples[0].e1 - e_a[1]).abs() < 1e-10);
        assert!((r.samples[200].e0 - e_b[0]).abs() < 1e-10);
        assert!((r.samples[200].e1 - e_b[1]).abs() < 1e-10);
        let diff = b.to_dense().unwrap() - a.to_dense().unwrap();
        let op_norm = HermitianEigen::new(&diff)
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(r.theta > 0.0 && r.theta <= op_norm + 1e-12);
    }

    #[test]
    fn bound_time_formula() {
        let r = gap_scan(&h0(2), &grover(2, &[0]), 201).unwrap();
        let t1 = adiabatic_bound_time(&r, 1.0).unwrap();
        assert!((t1 - r.theta / (r.delta_min * r.delta_min)).abs() < 1e-12);
        let t = adiabatic_bound_time(&r, 0.3).unwrap();
        assert!((adiabatic_bound_time(&r, 0.6).unwrap() - t / 2.0).abs() < 1e-9);
        assert!(adiabatic_bound_time(&r, 0.0).is_err());

        let p = adiabatic_run(&h0(2), &grover(2, &[0]), &AdiabaticSchedule::new(t).unwrap())
            .unwrap()
            .success_prob;
        assert!(p >= 0.91, "{p}");
    }

    #[test]
    fn degenerate_target_is_flagged() {
        let r = gap_scan(&h0(2), &grover(2, &[0, 3]), 201).unwrap();
        assert!(r.degenerate);
        assert!(matches!(adiabatic_bound_time(&r, 0.3), Err(SimError::ZeroGap)));
        // success sums over both minima
        let out = adiabatic_run(&h0(2), &grover(2, &[0, 3]), &AdiabaticSchedule::new(0.0).unwrap())
            .unwrap();
        assert!((out.success_prob - 0.5).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        let (a, b) = (h0(2), grover(2, &[1]));
        assert!((round_trip_check(&a, &b, &AdiabaticSchedule::new(0.0).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        let r = gap_scan(&a, &b, 201).unwrap();
        let t = 10.0 * adiabatic_bound_time(&r, 0.3).unwrap();
        let back = round_trip_check(&a, &b, &AdiabaticSchedule::new(t).unwrap()).unwrap();
        assert!(back >= 0.99, "{back}");
    }
}
