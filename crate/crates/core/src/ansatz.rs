//! The four parameterized circuits compared by the workbench.
//!
//! * `VQE_REF` — per-task one-hot blocks over `(x_i1..x_iA, s_i)`
//!   followed by reversible slack arithmetic that writes each agent's
//!   budget into its register and subtracts the weights of assigned
//!   tasks, in superposition over the assignment patterns.
//! * `VQGAP_REF` — the same one-hot blocks alone.
//! * `VQGAPE_RXL` — a single layer of X rotations, one per qubit.
//! * `VQGAPE_ESU2` — a two-local hardware-efficient circuit: `rep`
//!   repetitions of per-qubit RY/RZ rotations plus a linear CNOT chain,
//!   closed by one more rotation layer.
//!
//! The one-hot block keeps the whole state inside the span of the `A+1`
//! one-hot basis states of its qubits, so every measurement of `VQE_REF`
//! and `VQGAP_REF` satisfies the one-agent-per-task constraint exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GateAngle};
use crate::layout::{LayoutKind, VariableLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnsatzKind {
    #[serde(rename = "VQE_REF")]
    VqeRef,
    #[serde(rename = "VQGAP_REF")]
    VqgapRef,
    #[serde(rename = "VQGAPE_RXL")]
    VqgapeRxl,
    #[serde(rename = "VQGAPE_ESU2")]
    VqgapeEsu2,
}

impl std::fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AnsatzKind::VqeRef => "VQE_REF",
            AnsatzKind::VqgapRef => "VQGAP_REF",
            AnsatzKind::VqgapeRxl => "VQGAPE_RXL",
            AnsatzKind::VqgapeEsu2 => "VQGAPE_ESU2",
        };
        f.write_str(name)
    }
}

/// Size card of a built ansatz; the gate-dependent entries are measured
/// from the actual circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzDescriptor {
    pub kind: AnsatzKind,
    pub qubit_count: usize,
    pub parameter_count: usize,
    pub two_qubit_gate_count: usize,
    pub two_qubit_depth: usize,
    pub esu2_reps: Option<usize>,
}

impl AnsatzDescriptor {
    fn measured(kind: AnsatzKind, circuit: &Circuit, esu2_reps: Option<usize>) -> Self {
        Self {
            kind,
            qubit_count: circuit.num_qubits(),
            parameter_count: circuit.num_params(),
            two_qubit_gate_count: circuit.two_qubit_gate_count(),
            two_qubit_depth: circuit.two_qubit_depth(),
            esu2_reps,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AnsatzError {
    #[error("one-hot block qubits must be distinct, got duplicate qubit {0}")]
    OverlappingQubits(usize),
    #[error("block needs one parameter slot per agent: {qubits} qubits require {} slots, got {slots}", qubits - 1)]
    BlockArityMismatch { qubits: usize, slots: usize },
    #[error("ansatz requires a {expected} layout, got {got}")]
    WrongLayoutKind {
        expected: LayoutKind,
        got: LayoutKind,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Gate sequence preparing a state supported on the one-hot basis states
/// of `block_qubits`.
///
/// Ordering is `(x_1, .., x_A, s)`: an X seeds amplitude on the first
/// qubit, then each `CRY`/`CNOT` pair moves a tunable fraction of it one
/// position to the right. With all angles zero the block deterministically
/// yields "assigned to the first agent".
pub fn onehot_block_gates(
    block_qubits: &[usize],
    param_slots: &[usize],
) -> Result<Vec<Gate>, AnsatzError> {
    for (k, &q) in block_qubits.iter().enumerate() {
        if block_qubits[..k].contains(&q) {
            return Err(AnsatzError::OverlappingQubits(q));
        }
    }
    if param_slots.len() + 1 != block_qubits.len() {
        return Err(AnsatzError::BlockArityMismatch {
            qubits: block_qubits.len(),
            slots: param_slots.len(),
        });
    }
    let mut gates = vec![Gate::X {
        qubit: block_qubits[0],
    }];
    for k in 1..block_qubits.len() {
        gates.push(Gate::Cry {
            control: block_qubits[k - 1],
            target: block_qubits[k],
            angle: GateAngle::Slot(param_slots[k - 1]),
        });
        gates.push(Gate::Cnot {
            control: block_qubits[k],
            target: block_qubits[k - 1],
        });
    }
    Ok(gates)
}

fn push_task_blocks(circuit: &mut Circuit, layout: &VariableLayout) -> Result<(), AnsatzError> {
    let (t, a) = (layout.num_tasks(), layout.num_agents());
    for i in 0..t {
        let mut block: Vec<usize> = (0..a).map(|j| layout.qubit_of_x(i, j)).collect();
        block.push(layout.qubit_of_s(i));
        let slots: Vec<usize> = (0..a).map(|k| i * a + k).collect();
        for gate in onehot_block_gates(&block, &slots)? {
            circuit.push(gate)?;
        }
    }
    Ok(())
}

/// The assignment-only reference ansatz: `T` parallel one-hot blocks.
pub fn build_vqgap(layout: &VariableLayout) -> Result<(Circuit, AnsatzDescriptor), AnsatzError> {
    if layout.kind() != LayoutKind::Vqgap {
        return Err(AnsatzError::WrongLayoutKind {
            expected: LayoutKind::Vqgap,
            got: layout.kind(),
        });
    }
    let mut circuit = Circuit::new(layout.qubit_count());
    push_task_blocks(&mut circuit, layout)?;
    let descriptor = AnsatzDescriptor::measured(AnsatzKind::VqgapRef, &circuit, None);
    Ok((circuit, descriptor))
}

/// Decrement-by-one (mod `2^m`) of a slack register, applied only when
/// `control` is set: flip the lowest bit, then flip each higher bit when
/// all bits below it are set.
fn push_controlled_decrement(
    circuit: &mut Circuit,
    control: usize,
    register: &[usize],
) -> Result<(), CircuitError> {
    circuit.push(Gate::Cnot {
        control,
        target: register[0],
    })?;
    for k in 1..register.len() {
        let mut controls = vec![control];
        controls.extend_from_slice(&register[..k]);
        circuit.push(Gate::Mcx {
            controls,
            target: register[k],
        })?;
    }
    Ok(())
}

/// The full reference ansatz: one-hot blocks plus slack arithmetic.
///
/// Each agent's register is initialized to the binary representation of
/// its budget; then, for every task, the task's weight is subtracted
/// (as repeated controlled decrements) conditioned on the assignment
/// qubit. Arithmetic is modulo `2^m`, so an overloaded agent's register
/// wraps and the budget penalty stays active.
pub fn build_vqe_ref(layout: &VariableLayout) -> Result<(Circuit, AnsatzDescriptor), AnsatzError> {
    if layout.kind() != LayoutKind::VqeFull {
        return Err(AnsatzError::WrongLayoutKind {
            expected: LayoutKind::VqeFull,
            got: layout.kind(),
        });
    }
    let instance = layout.instance().clone();
    let mut circuit = Circuit::new(layout.qubit_count());
    push_task_blocks(&mut circuit, layout)?;
    for j in 0..instance.num_agents {
        let register: Vec<usize> = (0..layout.slack_width(j))
            .map(|k| layout.qubit_of_slack_bit(j, k))
            .collect();
        for (k, &qubit) in register.iter().enumerate() {
            if (instance.budgets[j] >> k) & 1 == 1 {
                circuit.push(Gate::X { qubit })?;
            }
        }
        for i in 0..instance.num_tasks {
            for _ in 0..instance.weights[i][j] {
                push_controlled_decrement(&mut circuit, layout.qubit_of_x(i, j), &register)?;
            }
        }
    }
    let descriptor = AnsatzDescriptor::measured(AnsatzKind::VqeRef, &circuit, None);
    Ok((circuit, descriptor))
}

/// Single layer of parameterized X rotations; separable by construction.
pub fn build_vqgape_rxl(
    layout: &VariableLayout,
) -> Result<(Circuit, AnsatzDescriptor), AnsatzError> {
    let mut circuit = Circuit::new(layout.qubit_count());
    for q in 0..layout.qubit_count() {
        circuit.push(Gate::Rx {
            qubit: q,
            angle: GateAngle::Slot(q),
        })?;
    }
    let descriptor = AnsatzDescriptor::measured(AnsatzKind::VqgapeRxl, &circuit, None);
    Ok((circuit, descriptor))
}

/// Hardware-efficient two-local circuit: `rep` repetitions of per-qubit
/// RY/RZ rotations followed by a linear CNOT chain, then a final
/// rotation layer.
pub fn build_vqgape_esu2(
    layout: &VariableLayout,
    rep: usize,
) -> Result<(Circuit, AnsatzDescriptor), AnsatzError> {
    assert!(rep >= 1, "rep must be >= 1");
    let q = layout.qubit_count();
    let mut circuit = Circuit::new(q);
    let mut slot = 0;
    let mut rotation_layer = |circuit: &mut Circuit| -> Result<(), CircuitError> {
        for qubit in 0..q {
            circuit.push(Gate::Ry {
                qubit,
                angle: GateAngle::Slot(slot + qubit),
            })?;
        }
        for qubit in 0..q {
            circuit.push(Gate::Rz {
                qubit,
                angle: GateAngle::Slot(slot + q + qubit),
            })?;
        }
        slot += 2 * q;
        Ok(())
    };
    for _ in 0..rep {
        rotation_layer(&mut circuit)?;
        for qubit in 0..q.saturating_sub(1) {
            circuit.push(Gate::Cnot {
                control: qubit,
                target: qubit + 1,
            })?;
        }
    }
    rotation_layer(&mut circuit)?;
    let descriptor = AnsatzDescriptor::measured(AnsatzKind::VqgapeEsu2, &circuit, Some(rep));
    Ok((circuit, descriptor))
}

/// Builds the ansatz matching `kind` over `layout`.
pub fn build(
    kind: AnsatzKind,
    layout: &VariableLayout,
    esu2_reps: usize,
) -> Result<(Circuit, AnsatzDescriptor), AnsatzError> {
    match kind {
        AnsatzKind::VqeRef => build_vqe_ref(layout),
        AnsatzKind::VqgapRef => build_vqgap(layout),
        AnsatzKind::VqgapeRxl => build_vqgape_rxl(layout),
        AnsatzKind::VqgapeEsu2 => build_vqgape_esu2(layout, esu2_reps),
    }
}
