//! Gate-list intermediate representation of parameterized circuits.
//!
//! A [`Circuit`] is an ordered list of [`Gate`]s over `num_qubits` qubits
//! plus a count of tunable parameter slots. Rotation angles either
//! reference a slot of the parameter vector supplied at execution time or
//! carry a fixed constant.

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use crate::bits::BitString;

/// A rotation angle: bound constant or index into the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateAngle {
    Slot(usize),
    Fixed(f64),
}

impl GateAngle {
    pub fn resolve(&self, params: &[f64]) -> f64 {
        match *self {
            GateAngle::Slot(k) => params[k],
            GateAngle::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    X {
        qubit: usize,
    },
    H {
        qubit: usize,
    },
    Rx {
        qubit: usize,
        angle: GateAngle,
    },
    Ry {
        qubit: usize,
        angle: GateAngle,
    },
    Rz {
        qubit: usize,
        angle: GateAngle,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Cry {
        control: usize,
        target: usize,
        angle: GateAngle,
    },
    Mcx {
        controls: Vec<usize>,
        target: usize,
    },
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::X { .. } => "X",
            Gate::H { .. } => "H",
            Gate::Rx { .. } => "RX",
            Gate::Ry { .. } => "RY",
            Gate::Rz { .. } => "RZ",
            Gate::Cnot { .. } => "CNOT",
            Gate::Cry { .. } => "CRY",
            Gate::Mcx { .. } => "MCX",
        }
    }

    /// Operand qubits, controls first.
    pub fn operands(&self) -> Vec<usize> {
        match self {
            Gate::X { qubit }
            | Gate::H { qubit }
            | Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. } => vec![*qubit],
            Gate::Cnot { control, target }
            | Gate::Cry {
                control, target, ..
            } => {
                vec![*control, *target]
            }
            Gate::Mcx { controls, target } => {
                let mut ops = controls.clone();
                ops.push(*target);
                ops
            }
        }
    }

    pub fn angle(&self) -> Option<GateAngle> {
        match self {
            Gate::Rx { angle, .. }
            | Gate::Ry { angle, .. }
            | Gate::Rz { angle, .. }
            | Gate::Cry { angle, .. } => Some(*angle),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("gate operands must be distinct, got duplicate qubit {0}")]
    DuplicateOperand(usize),
    #[error("parameter slot {0} is never referenced by any gate")]
    UnusedParameterSlot(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            num_params: 0,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of tunable parameter slots referenced so far.
    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        let operands = gate.operands();
        for &q in &operands {
            if q >= self.num_qubits {
                return Err(CircuitError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        for (k, &q) in operands.iter().enumerate() {
            if operands[..k].contains(&q) {
                return Err(CircuitError::DuplicateOperand(q));
            }
        }
        if let Some(GateAngle::Slot(k)) = gate.angle() {
            self.num_params = self.num_params.max(k + 1);
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Checks that slots `0..num_params` are all referenced.
    pub fn check_slots(&self) -> Result<(), CircuitError> {
        let mut used = vec![false; self.num_params];
        for gate in &self.gates {
            if let Some(GateAngle::Slot(k)) = gate.angle() {
                used[k] = true;
            }
        }
        match used.iter().position(|u| !u) {
            Some(k) => Err(CircuitError::UnusedParameterSlot(k)),
            None => Ok(()),
        }
    }

    /// Number of gates acting on two or more qubits.
    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.operands().len() >= 2)
            .count()
    }

    /// Circuit depth counting only gates on two or more qubits;
    /// single-qubit gates are free.
    pub fn two_qubit_depth(&self) -> usize {
        let mut layer = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for gate in &self.gates {
            let operands = gate.operands();
            if operands.len() < 2 {
                continue;
            }
            let next = 1 + operands.iter().map(|&q| layer[q]).max().unwrap_or(0);
            for &q in &operands {
                layer[q] = next;
            }
            depth = depth.max(next);
        }
        depth
    }

    /// Debug dump of the gate list:
    /// `[{"gate": name, "qubits": [...], "param_slot": k | "angle": f}]`.
    pub fn to_json(&self) -> serde_json::Value {
        let gates: Vec<_> = self
            .gates
            .iter()
            .map(|g| {
                let mut obj = json!({
                    "gate": g.name(),
                    "qubits": g.operands(),
                });
                match g.angle() {
                    Some(GateAngle::Slot(k)) => {
                        obj["param_slot"] = json!(k);
                    }
                    Some(GateAngle::Fixed(v)) => {
                        obj["angle"] = json!(v);
                    }
                    None => {}
                }
                obj
            })
            .collect();
        serde_json::Value::Array(gates)
    }
}
