//! Quantum Fourier transform, period finding and the factoring pipeline.
//!
//! Register layout for period finding: the exponent register holds qubits
//! `0..q_in`, the function register qubits `q_in..q_in + q_out`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::oracles::{ClassicalFunction, OracleUnitary};
use crate::rng::RngStream;
use crate::simcore::{Circuit, GateMatrix, StateVector, DEFAULT_QUBIT_CAP};

/// A QFT circuit together with its gate census.
#[derive(Debug, Clone)]
pub struct QftCircuit {
    pub circuit: Circuit,
    pub hadamards: usize,
    pub phase_gates: usize,
    pub swaps: usize,
}

impl QftCircuit {
    /// Hadamards plus conditional phase gates, excluding the final swaps.
    pub fn gate_count(&self) -> usize {
        self.hadamards + self.phase_gates
    }
}

/// QFT on `q` qubits, `c_y <- 2^{-q/2} sum_x c_x e^{2 pi i x y / 2^q}`.
///
/// The conditional phase `P_d = diag(1, 1, 1, e^{i pi / 2^d})` couples qubits
/// at distance `d`; with `cutoff = Some(m)` every `P_d` with `d >= m` is
/// dropped. The output order is restored with explicit swaps.
pub fn qft_circuit(q: usize, cutoff: Option<usize>) -> Result<QftCircuit> {
    if q == 0 {
        return Err(SimError::InvalidArgument("QFT needs q >= 1".into()));
    }
    if cutoff == Some(0) {
        return Err(SimError::InvalidArgument("cutoff m must be >= 1".into()));
    }
    let mut circuit = Circuit::new(q);
    let (mut hadamards, mut phase_gates, mut swaps) = (0, 0, 0);
    for j in (0..q).rev() {
        circuit.h(j)?;
        hadamards += 1;
        for k in (0..j).rev() {
            let d = j - k;
            if cutoff.is_some_and(|m| d >= m) {
                continue;
            }
            circuit.gate(GateMatrix::controlled_phase(PI / (1u64 << d) as f64), &[k, j])?;
            phase_gates += 1;
        }
    }
    for i in 0..q / 2 {
        circuit.swap(i, q - 1 - i)?;
        swaps += 1;
    }
    Ok(QftCircuit {
        circuit,
        hadamards,
        phase_gates,
        swaps,
    })
}

/// Direct `O(n^2)` evaluation of the unitary DFT with kernel `e^{+2 pi i x y / n}`.
pub fn dft_reference(input: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = input.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(SimError::NotPowerOfTwo(n));
    }
    let scale = (n as f64).sqrt().recip();
    Ok((0..n)
        .map(|y| {
            input
                .iter()
                .enumerate()
                .map(|(x, c)| c * Complex64::from_polar(1.0, 2.0 * PI * ((x * y) % n) as f64 / n as f64))
                .sum::<Complex64>()
                * scale
        })
        .collect())
}

/// Largest `||(QFT_m - QFT)|psi>||` over `trials` random states on `q` qubits.
pub fn approx_qft_error(q: usize, m: usize, trials: usize, rng: &mut RngStream) -> Result<f64> {
    if m == 0 || m > q {
        return Err(SimError::InvalidArgument(format!("cutoff m = {m} not in 1..={q}")));
    }
    let exact = qft_circuit(q, None)?;
    let approx = qft_circuit(q, Some(m))?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let psi = StateVector::random(q, rng)?;
        let mut a = psi.clone();
        let mut b = psi;
        exact.circuit.apply_unitary(&mut a)?;
        approx.circuit.apply_unitary(&mut b)?;
        let dev = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Exact `||QFT_m - QFT||` in the operator 2-norm, i.e. the worst case over
/// all inputs. Random states concentrate near the RMS deviation, so
/// [`approx_qft_error`] only approaches this from below.
pub fn approx_qft_operator_norm(q: usize, m: usize) -> Result<f64> {
    if m == 0 || m > q {
        return Err(SimError::InvalidArgument(format!("cutoff m = {m} not in 1..={q}")));
    }
    crate::dynamics::check_dense_cap(q)?;
    let exact = qft_circuit(q, None)?;
    let approx = qft_circuit(q, Some(m))?;
    let dim = 1usize << q;
    let mut diff = DMatrix::<Complex64>::zeros(dim, dim);
    for x in 0..dim {
        let mut a = StateVector::new_basis_state(q, x)?;
        let mut b = a.clone();
        exact.circuit.apply_unitary(&mut a)?;
        approx.circuit.apply_unitary(&mut b)?;
        for (y, (u, v)) in a.amplitudes().iter().zip(b.amplitudes()).enumerate() {
            diff[(y, x)] = v - u;
        }
    }
    let gram = diff.adjoint() * &diff;
    let top = gram.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
    Ok(top.max(0.0).sqrt())
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// `base^exp mod modulus` by repeated squaring.
pub fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut result: u128 = 1;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    result as u64
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

fn integer_root(n: u64, k: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64;
    // Nudge for floating-point error.
    while r > 0 && r.checked_pow(k).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(k).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// `Some((p, k))` when `n = p^k` for a prime `p` and `k >= 2`.
pub fn is_prime_power(n: u64) -> Option<(u64, u32)> {
    if n < 4 {
        return None;
    }
    (2..=63u32).rev().find_map(|k| {
        let r = integer_root(n, k);
        (r >= 2 && r.checked_pow(k) == Some(n) && is_prime(r)).then_some((r, k))
    })
}

/// Smallest `r > 0` with `a^r = 1 mod n`, by direct iteration.
pub fn multiplicative_order(a: u64, n: u64) -> Option<u64> {
    if gcd(a, n) != 1 || n < 2 {
        return None;
    }
    let mut x = a % n;
    let mut r = 1;
    while x != 1 {
        x = (x as u128 * a as u128 % n as u128) as u64;
        r += 1;
        if r > n {
            return None;
        }
    }
    Some(r)
}

/// Number of bits needed to hold `0..n`.
fn bits_for(n: u64) -> usize {
    (64 - (n - 1).leading_zeros()) as usize
}

/// Truth table of `x -> a^x mod n` for `x < 2^q_in`.
pub fn modexp_function(a: u64, n: u64, q_in: usize, q_out: usize) -> Result<ClassicalFunction> {
    if n < 2 || a >= n || gcd(a, n) != 1 {
        return Err(SimError::InvalidArgument(format!(
            "need 0 < a < N with gcd(a, N) = 1, got a = {a}, N = {n}"
        )));
    }
    if bits_for(n) > q_out {
        return Err(SimError::InvalidArgument(format!(
            "{q_out} output bits cannot hold residues mod {n}"
        )));
    }
    ClassicalFunction::from_fn(q_in, q_out, |x| pow_mod(a, x, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterPlan {
    pub q_in: usize,
    pub q_out: usize,
    /// `2^q_in < N^2`: the register was shrunk to fit the qubit cap.
    pub reduced: bool,
}

impl RegisterPlan {
    pub fn n(&self) -> u64 {
        1 << self.q_in
    }
}

/// Register widths for period finding mod `n`: `2^q_in >= n^2` when that fits
/// in the cap, otherwise `q_in = ceil(log2 n) + 3`.
pub fn register_plan(n: u64) -> Result<RegisterPlan> {
    if n < 3 {
        return Err(SimError::InvalidArgument(format!("modulus {n} too small")));
    }
    let q_out = bits_for(n);
    let full = bits_for(n * n);
    if full + q_out <= DEFAULT_QUBIT_CAP {
        return Ok(RegisterPlan {
            q_in: full,
            q_out,
            reduced: false,
        });
    }
    let reduced = q_out + 3;
    if reduced + q_out <= DEFAULT_QUBIT_CAP {
        return Ok(RegisterPlan {
            q_in: reduced,
            q_out,
            reduced: true,
        });
    }
    Err(SimError::TooManyQubits {
        requested: reduced + q_out,
        cap: DEFAULT_QUBIT_CAP,
    })
}

/// State `2^{-q_in} sum_{x,y} e^{2 pi i x y / 2^q_in} |y, a^x mod N>` just
/// before the exponent register is measured.
pub fn period_finding_state(a: u64, n: u64, plan: RegisterPlan) -> Result<StateVector> {
    let f = modexp_function(a, n, plan.q_in, plan.q_out)?;
    let oracle = OracleUnitary::standard(f);
    let mut state = StateVector::new_basis_state(plan.q_in + plan.q_out, 0)?;
    let h = GateMatrix::hadamard();
    for q in 0..plan.q_in {
        state.apply_gate(&h, &[q])?;
    }
    oracle.apply(&mut state)?;
    qft_circuit(plan.q_in, None)?.circuit.apply_unitary(&mut state)?;
    Ok(state)
}

/// Exact distribution of the measured exponent register.
pub fn period_distribution(a: u64, n: u64, plan: RegisterPlan) -> Result<Vec<f64>> {
    let state = period_finding_state(a, n, plan)?;
    let qubits: Vec<usize> = (0..plan.q_in).collect();
    state.marginal_probabilities(&qubits)
}

/// Mass of `dist` on `y` with `|y - k n / p| <= 1/2` for some integer `k`.
pub fn peak_mass(dist: &[f64], period: u64) -> f64 {
    let n = dist.len() as f64;
    let p = period as f64;
    dist.iter()
        .enumerate()
        .filter(|(y, _)| {
            let k = (*y as f64 * p / n).round();
            (*y as f64 - k * n / p).abs() <= 0.5 + 1e-12
        })
        .map(|(_, m)| m)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodSample {
    pub y: u64,
    pub plan: RegisterPlan,
}

/// One run of the quantum period-finding circuit.
pub fn period_find_quantum(a: u64, n: u64, rng: &mut RngStream) -> Result<PeriodSample> {
    let plan = register_plan(n)?;
    period_find_with_plan(a, n, plan, rng)
}

pub fn period_find_with_plan(
    a: u64,
    n: u64,
    plan: RegisterPlan,
    rng: &mut RngStream,
) -> Result<PeriodSample> {
    let mut state = period_finding_state(a, n, plan)?;
    let qubits: Vec<usize> = (0..plan.q_in).collect();
    let bits = state.measure_subset(&qubits, rng)?;
    let y = bits.iter().enumerate().fold(0u64, |acc, (j, &b)| acc | (b as u64) << j);
    Ok(PeriodSample { y, plan })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFractionResult {
    pub terms: Vec<u64>,
    /// Convergents `h/k` after the leading `0/1`; lowest terms, denominators
    /// strictly increasing.
    pub convergents: Vec<(u64, u64)>,
}

/// Continued-fraction expansion of `num / den` for `0 <= num < den`.
pub fn continued_fraction(num: u64, den: u64) -> ContinuedFractionResult {
    let mut terms = Vec::new();
    let (mut p, mut q) = (num, den);
    while q != 0 {
        terms.push(p / q);
        (p, q) = (q, p % q);
    }
    let (mut h_prev, mut h) = (1u64, terms[0]);
    let (mut k_prev, mut k) = (0u64, 1u64);
    let mut convergents = Vec::new();
    for &t in &terms[1..] {
        (h_prev, h) = (h, t * h + h_prev);
        (k_prev, k) = (k, t * k + k_prev);
        convergents.push((h, k));
    }
    ContinuedFractionResult { terms, convergents }
}

/// Convergent denominators `2 <= k < modulus` of `y / n`, ascending.
pub fn period_candidates(y: u64, n: u64, modulus: u64) -> Vec<u64> {
    if y == 0 {
        return Vec::new();
    }
    let mut out: Vec<u64> = continued_fraction(y, n)
        .convergents
        .into_iter()
        .map(|(_, k)| k)
        .filter(|&k| k >= 2 && k < modulus)
        .collect();
    out.dedup();
    out
}

/// Smallest `r` among candidates and their multiples `2r, 3r` with
/// `a^r = 1 mod N`.
pub fn extract_period(y: u64, n: u64, a: u64, modulus: u64) -> Option<u64> {
    period_candidates(y, n, modulus)
        .into_iter()
        .flat_map(|r| (1..=3).map(move |m| r * m))
        .filter(|&r| pow_mod(a, r, modulus) == 1)
        .min()
}

/// Reduces a known multiple of the order to the order itself.
fn reduce_to_order(mut r: u64, a: u64, modulus: u64) -> u64 {
    let mut d = 2;
    let mut rest = r;
    while d * d <= rest {
        while rest.is_multiple_of(d) {
            rest /= d;
            while r.is_multiple_of(d) && pow_mod(a, r / d, modulus) == 1 {
                r /= d;
            }
        }
        d += 1;
    }
    if rest > 1 && r.is_multiple_of(rest) && pow_mod(a, r / rest, modulus) == 1 {
        r /= rest;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodStrategy {
    /// One sample per base, continued fractions plus small-multiple repair.
    ContinuedFraction,
    /// Two samples per base; the lcm of their best denominators.
    Lcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodBackend {
    Quantum,
    /// Brute-force order finding; exercises the classical reduction for
    /// moduli beyond the simulator's cap.
    Classical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShorOptions {
    pub max_trials: usize,
    pub strategy: PeriodStrategy,
    pub base: Option<u64>,
    pub backend: PeriodBackend,
}

impl Default for ShorOptions {
    fn default() -> Self {
        Self {
            max_trials: 20,
            strategy: PeriodStrategy::ContinuedFraction,
            base: None,
            backend: PeriodBackend::Quantum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoringRun {
    pub n: u64,
    pub factor: u64,
    pub a: u64,
    /// `None` when `gcd(a, N)` already split `N`.
    pub period: Option<u64>,
    pub trials: usize,
    pub y_samples: Vec<u64>,
    pub candidate_periods: Vec<u64>,
    pub plan: Option<RegisterPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorOutcome {
    Factor(FactoringRun),
    PrimePower { prime: u64, exponent: u32 },
}

/// Splits `n` given a base `a` and its order `r`, if `r` is even and
/// `a^{r/2} != -1 mod n`.
pub fn factor_from_period(a: u64, r: u64, n: u64) -> Option<u64> {
    if r % 2 == 1 {
        return None;
    }
    let half = pow_mod(a, r / 2, n);
    if half == n - 1 {
        return None;
    }
    [gcd(half + n - 1, n), gcd(half + 1, n)]
        .into_iter()
        .find(|&g| g != 1 && g != n)
}

fn sample_period(
    a: u64,
    n: u64,
    opts: &ShorOptions,
    rng: &mut RngStream,
    run: &mut FactoringRun,
) -> Result<Option<u64>> {
    if opts.backend == PeriodBackend::Classical {
        return Ok(multiplicative_order(a, n));
    }
    let plan = register_plan(n)?;
    run.plan = Some(plan);
    let samples = match opts.strategy {
        PeriodStrategy::ContinuedFraction => 1,
        PeriodStrategy::Lcm => 2,
    };
    let mut combined = 1;
    for _ in 0..samples {
        let s = period_find_with_plan(a, n, plan, rng)?;
        run.y_samples.push(s.y);
        let cands = period_candidates(s.y, plan.n(), n);
        run.candidate_periods.extend(&cands);
        match opts.strategy {
            PeriodStrategy::ContinuedFraction => return Ok(extract_period(s.y, plan.n(), a, n)),
            PeriodStrategy::Lcm => {
                if let Some(&best) = cands.last() {
                    combined = lcm(combined, best);
                }
                if combined < n && pow_mod(a, combined, n) == 1 {
                    return Ok(Some(reduce_to_order(combined, a, n)));
                }
            }
        }
    }
    Ok(None)
}

/// Factors an odd composite `n >= 9`, or reports it as a prime power.
pub fn shor_factor(n: u64, rng: &mut RngStream, opts: &ShorOptions) -> Result<FactorOutcome> {
    if n.is_multiple_of(2) {
        return Err(SimError::NotFactorable(n, "even numbers have the factor 2".into()));
    }
    if n < 9 {
        return Err(SimError::NotFactorable(n, "need an odd composite N >= 9".into()));
    }
    if is_prime(n) {
        return Err(SimError::NotFactorable(n, "N is prime".into()));
    }
    if let Some((prime, exponent)) = is_prime_power(n) {
        return Ok(FactorOutcome::PrimePower { prime, exponent });
    }
    if let Some(a) = opts.base {
        if a < 2 || a >= n {
            return Err(SimError::InvalidArgument(format!("base {a} not in 2..{n}")));
        }
    }
    let mut run = FactoringRun {
        n,
        factor: 0,
        a: 0,
        period: None,
        trials: 0,
        y_samples: Vec::new(),
        candidate_periods: Vec::new(),
        plan: None,
    };
    for trial in 1..=opts.max_trials {
        run.trials = trial;
        let a = opts.base.unwrap_or_else(|| 2 + rng.below(n - 2));
        run.a = a;
        let g = gcd(a, n);
        if g != 1 {
            run.factor = g;
            run.period = None;
            return Ok(FactorOutcome::Factor(run));
        }
        let Some(r) = sample_period(a, n, opts, rng, &mut run)? else {
            continue;
        };
        run.period = Some(r);
        if let Some(factor) = factor_from_period(a, r, n) {
            run.factor = factor;
            return Ok(FactorOutcome::Factor(run));
        }
    }
    Err(SimError::FactoringFailed {
        n,
        trials: opts.max_trials,
    })
}
