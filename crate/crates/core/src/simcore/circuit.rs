use super::gate::{GateMatrix, GateOp};
use super::state::StateVector;
use crate::error::{Result, SimError};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Gate(GateOp),
    /// Projective measurement of the listed qubits in the computational basis.
    Measure(Vec<usize>),
    /// Measure and flip back to `|0>`; not recorded.
    Reset(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub step: usize,
    pub qubits: Vec<usize>,
    pub bits: Vec<u8>,
}

/// Ordered list of gates and measurements on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    steps: Vec<Step>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            steps: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Number of unitary steps.
    pub fn gate_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Gate(_)))
            .count()
    }

    fn check(&self, qubits: &[usize]) -> Result<()> {
        if qubits.iter().any(|&q| q >= self.n_qubits) {
            return Err(SimError::InvalidTargets {
                targets: qubits.to_vec(),
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn push(&mut self, op: GateOp) -> Result<&mut Self> {
        self.check(op.targets())?;
        self.steps.push(Step::Gate(op));
        Ok(self)
    }

    pub fn gate(&mut self, matrix: GateMatrix, targets: &[usize]) -> Result<&mut Self> {
        self.push(GateOp::new(matrix, targets.to_vec())?)
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.gate(GateMatrix::hadamard(), &[q])
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self> {
        self.gate(GateMatrix::pauli_x(), &[q])
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.gate(GateMatrix::cnot(), &[control, target])
    }

    pub fn swap(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        self.gate(GateMatrix::swap(), &[a, b])
    }

    pub fn measure(&mut self, qubits: &[usize]) -> Result<&mut Self> {
        if qubits.is_empty() {
            return Err(SimError::EmptyQubitList);
        }
        self.check(qubits)?;
        self.steps.push(Step::Measure(qubits.to_vec()));
        Ok(self)
    }

    pub fn reset(&mut self, q: usize) -> Result<&mut Self> {
        self.check(&[q])?;
        self.steps.push(Step::Reset(q));
        Ok(self)
    }

    /// Appends `other`, whose qubit `i` is mapped to `layout[i]` here.
    pub fn append_mapped(&mut self, other: &Circuit, layout: &[usize]) -> Result<&mut Self> {
        if layout.len() != other.n_qubits {
            return Err(SimError::QubitMismatch {
                expected: other.n_qubits,
                got: layout.len(),
            });
        }
        self.check(layout)?;
        for step in &other.steps {
            let mapped = match step {
                Step::Gate(op) => Step::Gate(GateOp::new(
                    op.matrix().clone(),
                    op.targets().iter().map(|&t| layout[t]).collect(),
                )?),
                Step::Measure(qs) => Step::Measure(qs.iter().map(|&q| layout[q]).collect()),
                Step::Reset(q) => Step::Reset(layout[*q]),
            };
            self.steps.push(mapped);
        }
        Ok(self)
    }

    /// Adjoint circuit; fails if any step is a measurement or reset.
    pub fn inverse(&self) -> Result<Circuit> {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                Step::Gate(op) => Ok(Step::Gate(op.dagger())),
                _ => Err(SimError::NotInvertible),
            })
            .collect::<Result<_>>()?;
        Ok(Circuit {
            n_qubits: self.n_qubits,
            steps,
        })
    }

    /// Applies only the unitary part, failing on measurement steps.
    pub fn apply_unitary(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() < self.n_qubits {
            return Err(SimError::QubitMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        for step in &self.steps {
            match step {
                Step::Gate(op) => state.apply(op)?,
                _ => return Err(SimError::NotInvertible),
            }
        }
        Ok(())
    }

    /// Runs the circuit from `initial`, returning the final state and one
    /// record per `Measure` step in execution order.
    pub fn run(
        &self,
        initial: StateVector,
        rng: &mut RngStream,
    ) -> Result<(StateVector, Vec<MeasurementRecord>)> {
        if initial.n_qubits() != self.n_qubits {
            return Err(SimError::QubitMismatch {
                expected: self.n_qubits,
                got: initial.n_qubits(),
            });
        }
        let mut state = initial;
        let records = self.run_in_place(&mut state, rng)?;
        Ok((state, records))
    }

    /// Like [`Circuit::run`] but on a possibly larger register (extra qubits untouched).
    pub fn run_in_place(
        &self,
        state: &mut StateVector,
        rng: &mut RngStream,
    ) -> Result<Vec<MeasurementRecord>> {
        if state.n_qubits() < self.n_qubits {
            return Err(SimError::QubitMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        let mut records = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                Step::Gate(op) => state.apply(op)?,
                Step::Measure(qs) => {
                    let bits = state.measure_subset(qs, rng)?;
                    records.push(MeasurementRecord {
                        step: i,
                        qubits: qs.clone(),
                        bits,
                    });
                }
                Step::Reset(q) => {
                    state.reset(*q, rng)?;
                }
            }
        }
        Ok(records)
    }
}
