//! Repetition, Shor-9 and Steane-7 codes: encoders, noise injection,
//! ancilla-based syndrome extraction, table-driven correction and the
//! error-scaling experiment. Also the classical [7,4,3] Hamming code.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::rng::RngStream;
use crate::simcore::{kernel, Circuit, GateMatrix, StateVector};

/// Parity-check matrix of the [7,4,3] Hamming code; column `i` (1-based) is
/// `i` in binary with row 0 as the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HammingCode {
    h: [[u8; 7]; 3],
}

impl Default for HammingCode {
    fn default() -> Self {
        Self::new()
    }
}

impl HammingCode {
    pub fn new() -> Self {
        Self {
            h: [
                [0, 0, 0, 1, 1, 1, 1],
                [0, 1, 1, 0, 0, 1, 1],
                [1, 0, 1, 0, 1, 0, 1],
            ],
        }
    }

    pub fn matrix(&self) -> &[[u8; 7]; 3] {
        &self.h
    }

    /// Row `r` as a bit mask over word positions (bit `i-1` is position `i`).
    pub fn row_mask(&self, r: usize) -> u8 {
        self.h[r]
            .iter()
            .enumerate()
            .fold(0, |m, (i, &b)| m | (b << i))
    }

    /// `h * word^T` over GF(2), row 0 as the high bit. `word` bit `i-1` holds
    /// position `i`.
    pub fn syndrome(&self, word: u8) -> u8 {
        (0..3).fold(0, |s, r| {
            s << 1 | ((word & self.row_mask(r)).count_ones() & 1) as u8
        })
    }

    /// The 16 words with zero syndrome, ascending.
    pub fn codewords(&self) -> Vec<u8> {
        (0..128u8).filter(|&w| self.syndrome(w) == 0).collect()
    }

    /// The 8 even-weight codewords (the row space of `h`).
    pub fn even_codewords(&self) -> Vec<u8> {
        self.codewords()
            .into_iter()
            .filter(|w| w.count_ones() % 2 == 0)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> GateMatrix {
        match self {
            Pauli::X => GateMatrix::pauli_x(),
            Pauli::Y => GateMatrix::pauli_y(),
            Pauli::Z => GateMatrix::pauli_z(),
        }
    }

    fn flips_z_checks(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn flips_x_checks(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

/// A Pauli product that is entirely `X` or entirely `Z` on `support`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stabilizer {
    pub kind: Pauli,
    pub support: Vec<usize>,
}

impl Stabilizer {
    fn z(support: &[usize]) -> Self {
        Self {
            kind: Pauli::Z,
            support: support.to_vec(),
        }
    }

    fn x(support: &[usize]) -> Self {
        Self {
            kind: Pauli::X,
            support: support.to_vec(),
        }
    }

    fn mask(&self) -> usize {
        self.support.iter().map(|q| 1 << q).sum()
    }

    /// Whether a single-qubit `p` on `qubit` anticommutes with this check.
    pub fn detects(&self, qubit: usize, p: Pauli) -> bool {
        self.support.contains(&qubit)
            && match self.kind {
                Pauli::Z => p.flips_z_checks(),
                _ => p.flips_x_checks(),
            }
    }

    /// `<psi|S|psi>`.
    fn expectation(&self, amps: &[Complex64]) -> f64 {
        let mask = self.mask();
        match self.kind {
            Pauli::Z => amps
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let sign = if (i & mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                    sign * a.norm_sqr()
                })
                .sum(),
            _ => amps
                .iter()
                .enumerate()
                .map(|(i, a)| (a.conj() * amps[i ^ mask]).re)
                .sum(),
        }
    }

    /// Projects onto the eigenvalue `(-1)^bit` without renormalizing.
    fn project(&self, amps: &mut [Complex64], bit: u8) {
        let mask = self.mask();
        match self.kind {
            Pauli::Z => {
                for (i, a) in amps.iter_mut().enumerate() {
                    if (i & mask).count_ones() % 2 != bit as u32 {
                        *a = Complex64::new(0.0, 0.0);
                    }
                }
            }
            _ => {
                let sign = if bit == 0 { 1.0 } else { -1.0 };
                for i in 0..amps.len() {
                    let j = i ^ mask;
                    if i < j {
                        let (a, b) = (amps[i], amps[j]);
                        amps[i] = (a + sign * b) * 0.5;
                        amps[j] = (b + sign * a) * 0.5;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeKind {
    Repetition,
    Shor9,
    Steane7,
}

impl CodeKind {
    pub const ALL: [CodeKind; 3] = [CodeKind::Repetition, CodeKind::Shor9, CodeKind::Steane7];

    pub fn name(self) -> &'static str {
        match self {
            CodeKind::Repetition => "repetition",
            CodeKind::Shor9 => "shor9",
            CodeKind::Steane7 => "steane7",
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodeKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repetition" | "rep3" => Ok(CodeKind::Repetition),
            "shor9" | "shor" => Ok(CodeKind::Shor9),
            "steane7" | "steane" => Ok(CodeKind::Steane7),
            _ => Err(SimError::InvalidArgument(format!(
                "unknown code {s:?} (expected repetition, shor9, steane7)"
            ))),
        }
    }
}

/// Syndrome bits packed with stabilizer `k` at bit `k`.
type Packed = u32;

fn unpack(s: Packed, len: usize) -> Vec<u8> {
    (0..len).map(|k| (s >> k & 1) as u8).collect()
}

fn pack(bits: &[u8]) -> Packed {
    bits.iter()
        .enumerate()
        .fold(0, |s, (k, &b)| s | (b as Packed) << k)
}

/// A code with its encoder, checks and single-qubit correction table.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    kind: CodeKind,
    n_physical: usize,
    logical_qubit: usize,
    encoder: Circuit,
    decoder: Circuit,
    stabilizers: Vec<Stabilizer>,
    table: BTreeMap<Packed, Option<(usize, Pauli)>>,
    /// Syndrome of each decoded-frame configuration of the non-logical qubits.
    frame: Vec<Packed>,
    /// Logical 2x2 action (row-major, up to phase) of each table correction.
    logical_action: BTreeMap<Packed, [Complex64; 4]>,
}

impl CodeSpec {
    pub fn new(kind: CodeKind) -> Result<Self> {
        let (n, lq, encoder, stabilizers) = match kind {
            CodeKind::Repetition => {
                let mut c = Circuit::new(3);
                c.cnot(0, 1)?.cnot(0, 2)?;
                (3, 0, c, vec![Stabilizer::z(&[0, 1]), Stabilizer::z(&[1, 2])])
            }
            CodeKind::Shor9 => {
                let mut c = Circuit::new(9);
                c.cnot(0, 3)?.cnot(0, 6)?;
                for b in [0, 3, 6] {
                    c.h(b)?;
                }
                for b in [0, 3, 6] {
                    c.cnot(b, b + 1)?.cnot(b, b + 2)?;
                }
                let mut s: Vec<_> = [0, 3, 6]
                    .iter()
                    .flat_map(|&b| [Stabilizer::z(&[b, b + 1]), Stabilizer::z(&[b + 1, b + 2])])
                    .collect();
                s.push(Stabilizer::x(&[0, 1, 2, 3, 4, 5]));
                s.push(Stabilizer::x(&[3, 4, 5, 6, 7, 8]));
                (9, 0, c, s)
            }
            CodeKind::Steane7 => {
                let mut c = Circuit::new(7);
                c.cnot(2, 4)?.cnot(2, 5)?;
                for (src, fan) in [(3, [4, 5, 6]), (1, [2, 5, 6]), (0, [2, 4, 6])] {
                    c.h(src)?;
                    for t in fan {
                        c.cnot(src, t)?;
                    }
                }
                let hamming = HammingCode::new();
                let rows: Vec<Vec<usize>> = (0..3)
                    .map(|r| (0..7).filter(|&q| hamming.matrix()[r][q] == 1).collect())
                    .collect();
                let mut s: Vec<_> = rows.iter().map(|r| Stabilizer::z(r)).collect();
                s.extend(rows.iter().map(|r| Stabilizer::x(r)));
                (7, 2, c, s)
            }
        };
        let decoder = encoder.inverse()?;

        let mut table = BTreeMap::new();
        table.insert(0, None);
        for q in 0..n {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let s = stabilizers
                    .iter()
                    .enumerate()
                    .fold(0, |s, (k, st)| s | (st.detects(q, p) as Packed) << k);
                table.entry(s).or_insert(Some((q, p)));
            }
        }

        let mut spec = Self {
            kind,
            n_physical: n,
            logical_qubit: lq,
            encoder,
            decoder,
            stabilizers,
            table,
            frame: Vec::new(),
            logical_action: BTreeMap::new(),
        };
        spec.build_frame()?;
        Ok(spec)
    }

    /// Decoded basis states `|l, r>` encode to stabilizer eigenstates; record
    /// the syndrome of each `r` and the logical action of every correction.
    fn build_frame(&mut self) -> Result<()> {
        let lq = [self.logical_qubit];
        let mut frame = Vec::with_capacity(1 << (self.n_physical - 1));
        for r in 0..1usize << (self.n_physical - 1) {
            let mut psi = StateVector::new_basis_state(self.n_physical, kernel::deposit(r, &lq))?;
            self.encoder.apply_unitary(&mut psi)?;
            let mut s = 0;
            for (k, st) in self.stabilizers.iter().enumerate() {
                let e = st.expectation(psi.amplitudes());
                if (e.abs() - 1.0).abs() > 1e-9 {
                    return Err(SimError::InvalidArgument(format!(
                        "{} encoder does not map basis states to check eigenstates",
                        self.kind
                    )));
                }
                s |= ((e < 0.0) as Packed) << k;
            }
            frame.push(s);
        }
        for (&s, corr) in &self.table {
            let Some(r0) = frame.iter().position(|&f| f == s) else {
                continue;
            };
            let mut m = [Complex64::new(0.0, 0.0); 4];
            if let Some((q, p)) = *corr {
                let mut image = None;
                for l in 0..2 {
                    let idx = kernel::deposit(r0, &lq) | l << self.logical_qubit;
                    let mut psi = StateVector::new_basis_state(self.n_physical, idx)?;
                    self.encoder.apply_unitary(&mut psi)?;
                    psi.apply_gate(&p.matrix(), &[q])?;
                    self.decoder.apply_unitary(&mut psi)?;
                    let j = psi
                        .amplitudes()
                        .iter()
                        .position(|a| a.norm_sqr() > 0.5)
                        .expect("Clifford image of a basis state is a basis state");
                    let rest = j & !(1 << self.logical_qubit);
                    if *image.get_or_insert(rest) != rest {
                        return Err(SimError::InvalidArgument(
                            "correction does not factor in the decoded frame".into(),
                        ));
                    }
                    m[(j >> self.logical_qubit & 1) * 2 + l] = psi.amplitudes()[j];
                }
            } else {
                m[0] = Complex64::new(1.0, 0.0);
                m[3] = Complex64::new(1.0, 0.0);
            }
            self.logical_action.insert(s, m);
        }
        self.frame = frame;
        Ok(())
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn n_physical(&self) -> usize {
        self.n_physical
    }

    /// Physical qubit that carries the input before encoding.
    pub fn logical_qubit(&self) -> usize {
        self.logical_qubit
    }

    pub fn encoder(&self) -> &Circuit {
        &self.encoder
    }

    pub fn stabilizers(&self) -> &[Stabilizer] {
        &self.stabilizers
    }

    /// Syndrome -> correction, `None` meaning "no error".
    pub fn correction_table(&self) -> BTreeMap<Vec<u8>, Option<(usize, Pauli)>> {
        self.table
            .iter()
            .map(|(&s, &c)| (unpack(s, self.stabilizers.len()), c))
            .collect()
    }

    /// Syndrome of a single-qubit Pauli error.
    pub fn syndrome_of(&self, qubit: usize, p: Pauli) -> Vec<u8> {
        self.stabilizers
            .iter()
            .map(|st| st.detects(qubit, p) as u8)
            .collect()
    }

    /// `alpha|0> + beta|1>` -> `alpha|c0> + beta|c1>`.
    pub fn encode(&self, logical: &StateVector) -> Result<StateVector> {
        if logical.n_qubits() != 1 {
            return Err(SimError::QubitMismatch {
                expected: 1,
                got: logical.n_qubits(),
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << self.n_physical];
        amps[0] = logical.amplitudes()[0];
        amps[1 << self.logical_qubit] = logical.amplitudes()[1];
        let mut psi = StateVector::from_amplitudes(amps)?;
        self.encoder.apply_unitary(&mut psi)?;
        Ok(psi)
    }

    /// Inverse encoder on the data block; any extra qubits are untouched.
    pub fn decode(&self, state: &mut StateVector) -> Result<()> {
        self.decoder.apply_unitary(state)
    }

    /// Logical basis states built directly from their expansions.
    pub fn codewords(&self) -> Result<(StateVector, StateVector)> {
        let dim = 1usize << self.n_physical;
        let mut c0 = vec![Complex64::new(0.0, 0.0); dim];
        let mut c1 = c0.clone();
        match self.kind {
            CodeKind::Repetition => {
                c0[0] = Complex64::new(1.0, 0.0);
                c1[0b111] = Complex64::new(1.0, 0.0);
            }
            CodeKind::Shor9 => {
                let amp = 8f64.sqrt().recip();
                for blocks in 0..8usize {
                    let idx = (0..3)
                        .filter(|b| blocks >> b & 1 == 1)
                        .map(|b| 0b111 << (3 * b))
                        .sum::<usize>();
                    let sign = if blocks.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    c0[idx] = Complex64::new(amp, 0.0);
                    c1[idx] = Complex64::new(sign * amp, 0.0);
                }
            }
            CodeKind::Steane7 => {
                let amp = 8f64.sqrt().recip();
                for w in HammingCode::new().even_codewords() {
                    c0[w as usize] = Complex64::new(amp, 0.0);
                    c1[(w ^ 0x7f) as usize] = Complex64::new(amp, 0.0);
                }
            }
        }
        Ok((StateVector::from_amplitudes(c0)?, StateVector::from_amplitudes(c1)?))
    }

    /// One reused ancilla at `ancilla`: fan-in CNOTs (inside a Hadamard frame
    /// for X checks), measure, reset — once per stabilizer.
    pub fn syndrome_circuit(&self, ancilla: usize) -> Result<Circuit> {
        let mut c = Circuit::new(ancilla + 1);
        for st in &self.stabilizers {
            let rotate = st.kind == Pauli::X;
            if rotate {
                for &q in &st.support {
                    c.h(q)?;
                }
            }
            for &q in &st.support {
                c.cnot(q, ancilla)?;
            }
            if rotate {
                for &q in &st.support {
                    c.h(q)?;
                }
            }
            c.measure(&[ancilla])?.reset(ancilla)?;
        }
        Ok(c)
    }
}

/// Physical error to inject.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    BitFlip,
    PhaseFlip,
    PauliY,
    GeneralUnitary(GateMatrix),
    /// Couples the qubit to an environment qubit starting in `|0>`; with the
    /// environment vectors `|0>, |1>, |0>, -|1>` the map is a swap.
    EntanglingEnvironment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEvent {
    pub kind: NoiseKind,
    pub qubit: usize,
}

impl NoiseEvent {
    pub fn new(kind: NoiseKind, qubit: usize) -> Self {
        Self { kind, qubit }
    }

    pub fn needs_environment(&self) -> bool {
        matches!(self.kind, NoiseKind::EntanglingEnvironment)
    }
}

pub fn apply_noise(state: &mut StateVector, event: &NoiseEvent, env: Option<usize>) -> Result<()> {
    let q = event.qubit;
    match &event.kind {
        NoiseKind::BitFlip => state.apply_gate(&GateMatrix::pauli_x(), &[q]),
        NoiseKind::PhaseFlip => state.apply_gate(&GateMatrix::pauli_z(), &[q]),
        NoiseKind::PauliY => state.apply_gate(&GateMatrix::pauli_y(), &[q]),
        NoiseKind::GeneralUnitary(u) => {
            if u.arity() != 1 {
                return Err(SimError::BadMatrixShape {
                    expected: 4,
                    got: u.entries().len(),
                });
            }
            state.apply_gate(u, &[q])
        }
        NoiseKind::EntanglingEnvironment => {
            let e = env.ok_or(SimError::MissingEnvironment)?;
            state.apply_gate(&GateMatrix::swap(), &[q, e])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyndromeMethod {
    /// Ancilla qubit, CNOT fan-in, measure and reset per check.
    AncillaCircuit,
    /// Direct projection onto check eigenspaces (same statistics, no ancilla).
    Projector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionReport {
    pub syndrome: Vec<u8>,
    pub correction: Option<(usize, Pauli)>,
    /// False when the syndrome is not produced by any single-qubit Pauli.
    pub correctable: bool,
}

/// Extracts the syndrome of the data block (qubits `0..n_physical`) and
/// applies the table correction. Further qubits (an environment) are left
/// alone. Uncorrectable syndromes leave the state as measured.
pub fn correct(
    code: &CodeSpec,
    state: &mut StateVector,
    method: SyndromeMethod,
    rng: &mut RngStream,
) -> Result<CorrectionReport> {
    if state.n_qubits() < code.n_physical {
        return Err(SimError::QubitMismatch {
            expected: code.n_physical,
            got: state.n_qubits(),
        });
    }
    let syndrome = match method {
        SyndromeMethod::AncillaCircuit => {
            let ancilla = state.n_qubits();
            let mut ext = state.extend_zeros(1)?;
            let records = code.syndrome_circuit(ancilla)?.run_in_place(&mut ext, rng)?;
            let mut amps = ext.into_amplitudes();
            amps.truncate(amps.len() / 2);
            *state = StateVector::from_amplitudes(amps)?;
            records.iter().map(|r| r.bits[0]).collect::<Vec<_>>()
        }
        SyndromeMethod::Projector => {
            let mut amps = state.clone().into_amplitudes();
            let mut bits = Vec::with_capacity(code.stabilizers.len());
            for st in &code.stabilizers {
                let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                let p_plus = (1.0 + st.expectation(&amps) / n2) / 2.0;
                let bit = if p_plus >= 1.0 - 1e-15 {
                    0
                } else if p_plus <= 1e-15 {
                    1
                } else {
                    (rng.uniform() >= p_plus) as u8
                };
                st.project(&mut amps, bit);
                bits.push(bit);
            }
            *state = StateVector::from_unnormalized(amps)?;
            bits
        }
    };
    let entry = code.table.get(&pack(&syndrome)).copied();
    if let Some(Some((q, p))) = entry {
        state.apply_gate(&p.matrix(), &[q])?;
    }
    Ok(CorrectionReport {
        syndrome,
        correction: entry.flatten(),
        correctable: entry.is_some(),
    })
}

/// Fidelities read off in the decoded frame, averaged exactly over syndromes.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub syndrome_probabilities: BTreeMap<Vec<u8>, f64>,
    /// Logical fidelity without correction.
    pub uncorrected_fidelity: f64,
    /// Syndrome-averaged logical fidelity with table correction.
    pub corrected_fidelity: f64,
}

/// `encoded` holds the (possibly noisy) data block on `0..n_physical` plus
/// any environment qubits above it. Measuring all checks and correcting is
/// equivalent, after decoding, to reading the non-logical data qubits and
/// applying a fixed logical Pauli per syndrome, so the average over
/// measurement outcomes is computed in one pass.
pub fn frame_analysis(
    code: &CodeSpec,
    encoded: &StateVector,
    logical: &StateVector,
) -> Result<FrameAnalysis> {
    let mut decoded = encoded.clone();
    code.decode(&mut decoded)?;
    let lq = code.logical_qubit;
    let data_mask = (1usize << code.n_physical) - 1;
    let (t0, t1) = (logical.amplitudes()[0].conj(), logical.amplitudes()[1].conj());
    let amps = decoded.amplitudes();
    let mut probs: BTreeMap<Packed, f64> = BTreeMap::new();
    let (mut unc, mut cor) = (0.0, 0.0);
    for i in (0..amps.len()).filter(|i| i >> lq & 1 == 0) {
        let (d0, d1) = (amps[i], amps[i | 1 << lq]);
        let w = d0.norm_sqr() + d1.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let r = crate::simcore::gather(i & data_mask & !(1 << lq), &rest_qubits(code));
        let s = code.frame[r];
        *probs.entry(s).or_default() += w;
        unc += (t0 * d0 + t1 * d1).norm_sqr();
        let (c0, c1) = match code.logical_action.get(&s) {
            Some(m) => (m[0] * d0 + m[1] * d1, m[2] * d0 + m[3] * d1),
            None => (d0, d1),
        };
        cor += (t0 * c0 + t1 * c1).norm_sqr();
    }
    let k = code.stabilizers.len();
    Ok(FrameAnalysis {
        syndrome_probabilities: probs.into_iter().map(|(s, p)| (unpack(s, k), p)).collect(),
        uncorrected_fidelity: unc,
        corrected_fidelity: cor,
    })
}

fn rest_qubits(code: &CodeSpec) -> Vec<usize> {
    (0..code.n_physical)
        .filter(|&q| q != code.logical_qubit)
        .collect()
}

/// Exact syndrome distribution of an encoded (possibly noisy) state.
pub fn syndrome_distribution(code: &CodeSpec, encoded: &StateVector) -> Result<BTreeMap<Vec<u8>, f64>> {
    let one = StateVector::new_basis_state(1, 0)?;
    Ok(frame_analysis(code, encoded, &one)?.syndrome_probabilities)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub report: CorrectionReport,
    /// Fidelity of the logical qubit after decoding.
    pub logical_fidelity: f64,
    /// Fidelity of the data block with the noiseless encoded state.
    pub block_fidelity: f64,
}

/// Encode, inject `noise`, correct, decode. An environment qubit is appended
/// when the noise needs one.
pub fn protect(
    code: &CodeSpec,
    logical: &StateVector,
    noise: Option<&NoiseEvent>,
    method: SyndromeMethod,
    rng: &mut RngStream,
) -> Result<PipelineOutcome> {
    let clean = code.encode(logical)?;
    let data: Vec<usize> = (0..code.n_physical).collect();
    let mut state = clean.clone();
    if let Some(ev) = noise {
        if ev.qubit >= code.n_physical {
            return Err(SimError::IndexOutOfRange {
                index: ev.qubit,
                n_qubits: code.n_physical,
            });
        }
        let env = if ev.needs_environment() {
            state = state.extend_zeros(1)?;
            Some(code.n_physical)
        } else {
            None
        };
        apply_noise(&mut state, ev, env)?;
    }
    let report = correct(code, &mut state, method, rng)?;
    let block_fidelity = state.subsystem_fidelity(&clean, &data)?;
    code.decode(&mut state)?;
    let logical_fidelity = state.subsystem_fidelity(logical, &[code.logical_qubit])?;
    Ok(PipelineOutcome {
        report,
        logical_fidelity,
        block_fidelity,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub cases: usize,
    /// Largest change in any syndrome probability across logical states.
    pub max_deviation: f64,
    /// Descriptions of error cases whose syndrome depended on the input.
    pub dependent: Vec<String>,
}

impl PrivacyReport {
    pub fn is_private(&self) -> bool {
        self.dependent.is_empty()
    }
}

fn distribution_gap(a: &BTreeMap<Vec<u8>, f64>, b: &BTreeMap<Vec<u8>, f64>) -> f64 {
    a.keys()
        .chain(b.keys())
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max)
}

/// Logical test states: `|0>`, `|1>`, `|+>`, then Haar-random ones.
pub fn logical_test_states(count: usize, rng: &mut RngStream) -> Result<Vec<StateVector>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = vec![
        StateVector::new_basis_state(1, 0)?,
        StateVector::new_basis_state(1, 1)?,
        StateVector::from_amplitudes(vec![Complex64::new(h, 0.0); 2])?,
    ];
    out.truncate(count);
    while out.len() < count {
        out.push(StateVector::random(1, rng)?);
    }
    Ok(out)
}

/// For no error and each single-qubit Pauli at each position, checks that
/// the syndrome distribution is the same for 20 logical inputs.
pub fn syndrome_privacy_check(code: &CodeSpec, rng: &mut RngStream) -> Result<PrivacyReport> {
    let inputs = logical_test_states(20, rng)?;
    let encoded: Vec<StateVector> = inputs.iter().map(|l| code.encode(l)).collect::<Result<_>>()?;
    let mut cases: Vec<(String, Option<(usize, Pauli)>)> = vec![("none".into(), None)];
    for q in 0..code.n_physical {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            cases.push((format!("{p:?} on qubit {q}"), Some((q, p))));
        }
    }
    let mut report = PrivacyReport {
        cases: cases.len(),
        max_deviation: 0.0,
        dependent: Vec::new(),
    };
    for (label, err) in cases {
        let mut reference = None;
        let mut worst = 0.0f64;
        for psi in &encoded {
            let mut s = psi.clone();
            if let Some((q, p)) = err {
                s.apply_gate(&p.matrix(), &[q])?;
            }
            let dist = syndrome_distribution(code, &s)?;
            let r = reference.get_or_insert_with(|| dist.clone());
            worst = worst.max(distribution_gap(r, &dist));
        }
        report.max_deviation = report.max_deviation.max(worst);
        if worst > 1e-9 {
            report.dependent.push(label);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub epsilon: f64,
    pub uncorrected: f64,
    pub corrected: f64,
}

pub fn scaling_csv(points: &[ScalingPoint]) -> String {
    let mut out = String::from("epsilon,uncorrected,corrected\n");
    for p in points {
        let _ = writeln!(out, "{},{:e},{:e}", p.epsilon, p.uncorrected, p.corrected);
    }
    out
}

/// Every physical qubit is rotated about a random axis by the angle whose
/// non-identity weight is `epsilon` (`sin^2(theta/2) = epsilon`). Reports
/// mean logical infidelity with and without correction, the latter averaged
/// exactly over syndrome outcomes. Trial `t` of grid point `e` draws from
/// `rng.split(e).split(t)`.
pub fn error_scaling_experiment(
    code: &CodeSpec,
    epsilons: &[f64],
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<ScalingPoint>> {
    if trials == 0 {
        return Err(SimError::InvalidArgument("need at least one trial".into()));
    }
    if let Some(&e) = epsilons.iter().find(|&&e| !(0.0..=0.3).contains(&e)) {
        return Err(SimError::InvalidArgument(format!("epsilon {e} outside [0, 0.3]")));
    }
    let mut points = Vec::with_capacity(epsilons.len());
    for (ei, &eps) in epsilons.iter().enumerate() {
        let theta = 2.0 * eps.sqrt().asin();
        let stream = rng.split(ei as u64);
        let (mut unc, mut cor) = (0.0, 0.0);
        for t in 0..trials {
            let mut r = stream.split(t as u64);
            let logical = StateVector::random(1, &mut r)?;
            let mut state = code.encode(&logical)?;
            for q in 0..code.n_physical {
                let axis = [r.normal(), r.normal(), r.normal()];
                state.apply_gate(&GateMatrix::axis_rotation(axis, theta)?, &[q])?;
            }
            let a = frame_analysis(code, &state, &logical)?;
            unc += 1.0 - a.uncorrected_fidelity;
            cor += 1.0 - a.corrected_fidelity;
        }
        points.push(ScalingPoint {
            epsilon: eps,
            uncorrected: (unc / trials as f64).max(0.0),
            corrected: (cor / trials as f64).max(0.0),
        });
    }
    Ok(points)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn hamming_syndromes() {
        let h = HammingCode::new();
        let words = h.codewords();
        assert_eq!(words.len(), 16);
        assert!(words.iter().all(|&w| h.syndrome(w) == 0));
        for i in 1..=7u8 {
            assert_eq!(h.syndrome(1 << (i - 1)), i);
        }
        assert_eq!(h.syndrome(0b100), 3);
        for &w in &words {
            assert_eq!(h.syndrome(w ^ 0x40), 7);
        }
        assert_eq!(h.even_codewords().len(), 8);
        assert!(h.even_codewords().contains(&0b0110_0110));
    }

    #[test]
    fn repetition_encoding_entangles() {
        let code = CodeSpec::new(CodeKind::Repetition).unwrap();
        let zero = code.encode(&StateVector::new_basis_state(1, 0).unwrap()).unwrap();
        assert_eq!(zero.amplitudes()[0], c(1.0));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![c(h), c(h)]).unwrap();
        let ghz = code.encode(&plus).unwrap();
        assert!((ghz.amplitudes()[0] - c(h)).norm() < 1e-12);
        assert!((ghz.amplitudes()[7] - c(h)).norm() < 1e-12);
        for q in 0..3 {
            let rho = ghz.reduced_density_matrix(&[q]).unwrap();
            assert!((rho[(0, 0)].re - 0.5).abs() < 1e-12);
            assert!(rho[(0, 1)].norm() < 1e-12);
            assert!((ghz.subsystem_fidelity(&plus, &[q]).unwrap() - 0.5).abs() < 1e-12);
        }

        // the four single-flip outcomes are mutually orthogonal
        let flipped: Vec<StateVector> = (0..4)
            .map(|q| {
                let mut s = ghz.clone();
                if q > 0 {
                    s.apply_gate(&GateMatrix::pauli_x(), &[q - 1]).unwrap();
                }
                s
            })
            .collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(flipped[i].inner_product(&flipped[j]).unwrap().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn encoders_match_codewords() {
        for kind in CodeKind::ALL {
            let code = CodeSpec::new(kind).unwrap();
            let (c0, c1) = code.codewords().unwrap();
            assert!(c0.inner_product(&c1).unwrap().norm() < 1e-10);
            for (l, cw) in [(0, &c0), (1, &c1)] {
                let enc = code.encode(&StateVector::new_basis_state(1, l).unwrap()).unwrap();
                assert!(enc.max_abs_diff(cw) < 1e-10, "{kind} |{l}>");
                for st in code.stabilizers() {
                    assert!((st.expectation(enc.amplitudes()) - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn steane_logical_zero_support() {
        let code = CodeSpec::new(CodeKind::Steane7).unwrap();
        let (c0, _) = code.codewords().unwrap();
        let support: Vec<usize> = (0..128).filter(|&i| c0.amplitudes()[i].norm() > 0.0).collect();
        let expect: Vec<usize> = [
            "0000000", "0001111", "0110011", "0111100", "1010101", "1011010", "1100110", "1101001",
        ]
        .iter()
        .map(|w| w.chars().enumerate().filter(|(_, ch)| *ch == '1').map(|(i, _)| 1 << i).sum())
        .collect::<Vec<usize>>();
        let mut expect = expect;
        expect.sort_unstable();
        assert_eq!(support, expect);
    }

    #[test]
    fn noise_events() {
        let mut s = StateVector::new_basis_state(1, 0).unwrap();
        apply_noise(&mut s, &NoiseEvent::new(NoiseKind::BitFlip, 0), None).unwrap();
        assert_eq!(s.amplitudes()[1], c(1.0));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut s = StateVector::from_amplitudes(vec![c(h), c(h)]).unwrap();
        apply_noise(&mut s, &NoiseEvent::new(NoiseKind::PhaseFlip, 0), None).unwrap();
        assert!((s.amplitudes()[1] + c(h)).norm() < 1e-12);

        let env = NoiseEvent::new(NoiseKind::EntanglingEnvironment, 0);
        let mut s = StateVector::new_basis_state(1, 1).unwrap();
        assert!(matches!(apply_noise(&mut s, &env, None), Err(SimError::MissingEnvironment)));

        // data qubit ends in |0>, its content moves to the environment
        let mut rng = RngStream::new(3);
        let psi = StateVector::random(1, &mut rng).unwrap();
        let mut s = psi.extend_zeros(1).unwrap();
        apply_noise(&mut s, &env, Some(1)).unwrap();
        let rho = s.reduced_density_matrix(&[0]).unwrap();
        assert!((rho[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((s.subsystem_fidelity(&psi, &[1]).unwrap() - 1.0).abs() < 1e-12);

        // inside an encoded block the hit qubit becomes maximally mixed
        let code = CodeSpec::new(CodeKind::Shor9).unwrap();
        let mut s = code.encode(&psi).unwrap().extend_zeros(1).unwrap();
        apply_noise(&mut s, &NoiseEvent::new(NoiseKind::EntanglingEnvironment, 4), Some(9)).unwrap();
        let rho = s.reduced_density_matrix(&[9]).unwrap();
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-12 && rho[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn no_error_leaves_state() {
        let mut rng = RngStream::new(4);
        for kind in CodeKind::ALL {
            let code = CodeSpec::new(kind).unwrap();
            let psi = StateVector::random(1, &mut rng).unwrap();
            let enc = code.encode(&psi).unwrap();
            for method in [SyndromeMethod::AncillaCircuit, SyndromeMethod::Projector] {
                let mut s = enc.clone();
                let rep = correct(&code, &mut s, method, &mut rng).unwrap();
                assert!(rep.syndrome.iter().all(|&b| b == 0));
                assert!(s.max_abs_diff(&enc) < 1e-10);
            }
        }
    }

    #[test]
    fn steane_bit_flip_on_qubit_four() {
        let mut rng = RngStream::new(5);
        let code = CodeSpec::new(CodeKind::Steane7).unwrap();
        let psi = StateVector::random(1, &mut rng).unwrap();
        let ev = NoiseEvent::new(NoiseKind::BitFlip, 4);
        let out = protect(&code, &psi, Some(&ev), SyndromeMethod::AncillaCircuit, &mut rng).unwrap();
        assert_eq!(out.report.correction, Some((4, Pauli::X)));
        assert!((out.logical_fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shor_corrects_unitary_and_environment() {
        let mut rng = RngStream::new(6);
        let code = CodeSpec::new(CodeKind::Shor9).unwrap();
        for q in 0..9 {
            let psi = StateVector::random(1, &mut rng).unwrap();
            let u = GateMatrix::random_unitary(1, &mut rng).unwrap();
            for ev in [
                NoiseEvent::new(NoiseKind::GeneralUnitary(u.clone()), q),
                NoiseEvent::new(NoiseKind::EntanglingEnvironment, q),
            ] {
                for method in [SyndromeMethod::AncillaCircuit, SyndromeMethod::Projector] {
                    let out = protect(&code, &psi, Some(&ev), method, &mut rng).unwrap();
                    assert!(out.report.correctable);
                    assert!((out.block_fidelity - 1.0).abs() < 1e-9, "{:?}", ev.kind);
                    assert!((out.logical_fidelity - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn steane_phase_flip_via_rotated_checks() {
        let mut rng = RngStream::new(7);
        let code = CodeSpec::new(CodeKind::Steane7).unwrap();
        let psi = StateVector::random(1, &mut rng).unwrap();
        let ev = NoiseEvent::new(NoiseKind::PhaseFlip, 5);
        let out = protect(&code, &psi, Some(&ev), SyndromeMethod::AncillaCircuit, &mut rng).unwrap();
        // only the X checks (last three) fire, and they spell out position 6
        assert_eq!(out.report.syndrome, vec![0, 0, 0, 1, 1, 0]);
        assert!((out.logical_fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn repetition_code_misses_phase_errors() {
        let mut rng = RngStream::new(8);
        let code = CodeSpec::new(CodeKind::Repetition).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![c(h), c(h)]).unwrap();
        let bit = NoiseEvent::new(NoiseKind::BitFlip, 1);
        let out = protect(&code, &plus, Some(&bit), SyndromeMethod::AncillaCircuit, &mut rng).unwrap();
        assert_eq!(out.report.syndrome, vec![1, 1]);
        assert!((out.logical_fidelity - 1.0).abs() < 1e-9);
        let phase = NoiseEvent::new(NoiseKind::PhaseFlip, 1);
        let out = protect(&code, &plus, Some(&phase), SyndromeMethod::AncillaCircuit, &mut rng).unwrap();
        assert_eq!(out.report.syndrome, vec![0, 0]);
        assert!(out.logical_fidelity < 1e-9);
    }

    #[test]
    fn uncorrectable_syndrome_is_reported() {
        let mut rng = RngStream::new(9);
        let code = CodeSpec::new(CodeKind::Steane7).unwrap();
        let mut s = code.encode(&StateVector::new_basis_state(1, 0).unwrap()).unwrap();
        s.apply_gate(&GateMatrix::pauli_x(), &[0]).unwrap();
        s.apply_gate(&GateMatrix::pauli_z(), &[1]).unwrap();
        let before = s.clone();
        let rep = correct(&code, &mut s, SyndromeMethod::AncillaCircuit, &mut rng).unwrap();
        assert!(!rep.correctable);
        assert!(s.max_abs_diff(&before) < 1e-10);
    }

    #[test]
    fn frame_agrees_with_circuit_for_paulis() {
        let mut rng = RngStream::new(10);
        for kind in CodeKind::ALL {
            let code = CodeSpec::new(kind).unwrap();
            let psi = StateVector::random(1, &mut rng).unwrap();
            for q in 0..code.n_physical() {
                for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                    let mut s = code.encode(&psi).unwrap();
                    s.apply_gate(&p.matrix(), &[q]).unwrap();
                    let dist = syndrome_distribution(&code, &s).unwrap();
                    assert_eq!(dist.len(), 1);
                    assert_eq!(dist.keys().next().unwrap(), &code.syndrome_of(q, p));
                    let a = frame_analysis(&code, &s, &psi).unwrap();
                    let mut t = s.clone();
                    correct(&code, &mut t, SyndromeMethod::AncillaCircuit, &mut rng).unwrap();
                    code.decode(&mut t).unwrap();
                    let f = t.subsystem_fidelity(&psi, &[code.logical_qubit()]).unwrap();
                    assert!((a.corrected_fidelity - f).abs() < 1e-9, "{kind} {q} {p:?}");
                }
            }
        }
    }

    #[test]
    fn frame_average_matches_sampled_correction() {
        let mut rng = RngStream::new(11);
        let code = CodeSpec::new(CodeKind::Steane7).unwrap();
        let psi = StateVector::random(1, &mut rng).unwrap();
        let mut noisy = code.encode(&psi).unwrap();
        for q in [1, 4] {
            let u = GateMatrix::axis_rotation([0.3, -0.5, 0.8], 0.9).unwrap();
            noisy.apply_gate(&u, &[q]).unwrap();
        }
        let exact = frame_analysis(&code, &noisy, &psi).unwrap().corrected_fidelity;
        let trials = 4000;
        let mut mean = 0.0;
        for _ in 0..trials {
            let mut s = noisy.clone();
            correct(&code, &mut s, SyndromeMethod::Projector, &mut rng).unwrap();
            code.decode(&mut s).unwrap();
            mean += s.subsystem_fidelity(&psi, &[2]).unwrap();
        }
        mean /= trials as f64;
        assert!((mean - exact).abs() < 0.03, "{mean} vs {exact}");
    }

    #[test]
    fn privacy() {
        let mut rng = RngStream::new(12);
        for kind in CodeKind::ALL {
            let code = CodeSpec::new(kind).unwrap();
            let rep = syndrome_privacy_check(&code, &mut rng).unwrap();
            assert!(rep.is_private(), "{kind}: {:?}", rep.dependent);
            assert_eq!(rep.cases, 1 + 3 * code.n_physical());
        }
    }

    #[test]
    fn scaling_zero_and_quadratic() {
        let rng = RngStream::new(13);
        let code = CodeSpec::new(CodeKind::Steane7).unwrap();
        let pts = error_scaling_experiment(&code, &[0.0], 5, &rng).unwrap();
        assert!(pts[0].uncorrected < 1e-10 && pts[0].corrected < 1e-10);

        let eps = [0.01, 0.02, 0.04];
        let pts = error_scaling_experiment(&code, &eps, 300, &rng).unwrap();
        let unc: Vec<f64> = pts.iter().map(|p| p.uncorrected).collect();
        let cor: Vec<f64> = pts.iter().map(|p| p.corrected).collect();
        assert!((1.6..=2.4).contains(&loglog_slope(&eps, &cor)), "{cor:?}");
        assert!((0.8..=1.2).contains(&loglog_slope(&eps, &unc)), "{unc:?}");
        assert!(error_scaling_experiment(&code, &[0.5], 1, &rng).is_err());
        assert!(scaling_csv(&pts).starts_with("epsilon,uncorrected,corrected\n"));
    }

    #[test]
    fn code_names_round_trip() {
        for kind in CodeKind::ALL {
            assert_eq!(kind.name().parse::<CodeKind>().unwrap(), kind);
        }
        assert!("five".parse::<CodeKind>().is_err());
    }
}
