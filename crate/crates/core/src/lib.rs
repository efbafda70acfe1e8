//! Hybrid variational quantum algorithms for the Generalized Assignment
//! Problem (GAP).
//!
//! The crate provides the full workbench needed to run and compare three
//! algorithm families on exact statevector simulation:
//!
//! * **VQE** — every problem variable (assignments, task slacks, binary
//!   budget-slack registers) is mapped to a qubit and the cost is the
//!   expectation of a diagonal Ising Hamiltonian compiled from the
//!   penalty objective.
//! * **VQGAP** — only assignment and task-slack variables live on qubits;
//!   residual budgets are recomputed classically from each measured
//!   bitstring before the penalty objective is evaluated.
//! * **VQGAPe** — each task gets a compact binary code of
//!   `ceil(log2(A+1))` qubits that decodes to "agent j" or "unassigned",
//!   so every measured bitstring satisfies the one-agent-per-task
//!   constraint by construction.
//!
//! Modules follow the data flow: [`gap`] models instances and solves them
//! exactly, [`layout`] maps problem variables to qubits and decodes
//! measurements, [`qubo`] compiles the penalty objective to QUBO/Ising
//! form, [`circuit`] and [`sim`] provide the gate IR and the dense
//! statevector engine, [`ansatz`] builds the parameterized circuits,
//! [`optimizer`] minimizes shot-estimated costs, [`driver`] runs the
//! hybrid loop, and [`metrics`] computes the evaluation indices.

pub mod ansatz;
pub mod bits;
pub mod circuit;
pub mod driver;
pub mod gap;
pub mod layout;
pub mod metrics;
pub mod optimizer;
pub mod qubo;
pub mod rng;
pub mod sim;

pub use ansatz::{AnsatzDescriptor, AnsatzKind};
pub use circuit::{BitString, Circuit, Gate, GateAngle};
pub use driver::{Algorithm, AlgorithmConfig, RunResult};
pub use gap::{Assignment, BruteForceSolution, GapInstance, PenaltyObjective};
pub use layout::{DecodedVariables, LayoutKind, VariableLayout};
pub use metrics::MetricsReport;
pub use optimizer::{Method, OptimizerResult, OptimizerTrace};
pub use qubo::{IsingModel, QuboModel};
pub use sim::{Histogram, NoiseConfig, Statevector};
