//! Qubit layouts for each algorithm variant and the decode functions
//! from measured bitstrings back to problem variables.
//!
//! Three layouts share one convention: qubit 0 is the first character of
//! a reported bitstring, and multi-bit registers store their least
//! significant bit at the lowest qubit index.
//!
//! * `VqeFull` — assignment bits `x[i][j]`, task slacks `s[i]`, and one
//!   binary budget-slack register per agent.
//! * `Vqgap` — assignment bits and task slacks only; residual budgets
//!   are recomputed classically from the measured assignment.
//! * `Vqgape` — one `ceil(log2(A+1))`-bit code per task; code 0 means
//!   "unassigned", code `j` in `1..=A` selects agent `j`, and any code
//!   above `A` decodes to "unassigned" as well.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::gap::GapInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayoutKind {
    #[serde(rename = "VQE_FULL")]
    VqeFull,
    #[serde(rename = "VQGAP")]
    Vqgap,
    #[serde(rename = "VQGAPE")]
    Vqgape,
}

impl std::fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            LayoutKind::VqeFull => "VQE_FULL",
            LayoutKind::Vqgap => "VQGAP",
            LayoutKind::Vqgape => "VQGAPE",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("bitstring has {got} bits, layout expects {expected}")]
    BitStringLength { got: usize, expected: usize },
    #[error("operation requires a {expected} layout, got {got}")]
    KindMismatch {
        expected: LayoutKind,
        got: LayoutKind,
    },
}

/// Bits needed to represent every value in `0..=value` (`value >= 1`).
pub fn register_width(value: i64) -> usize {
    debug_assert!(value >= 1);
    64 - (value as u64).leading_zeros() as usize
}

/// Map between problem variables and qubit indices for one instance and
/// one algorithm variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableLayout {
    kind: LayoutKind,
    instance: GapInstance,
    qubit_count: usize,
    /// VqeFull: width of each agent's budget-slack register.
    slack_widths: Vec<usize>,
    /// Vqgape: width of each task's agent code.
    code_width: usize,
}

impl VariableLayout {
    pub fn new(instance: &GapInstance, kind: LayoutKind) -> Self {
        let (t, a) = (instance.num_tasks, instance.num_agents);
        let slack_widths: Vec<usize> = instance
            .budgets
            .iter()
            .map(|&b| register_width(b))
            .collect();
        // ceil(log2(A+1)) = bit length of A, the largest code value
        let code_width = register_width(a as i64);
        let qubit_count = match kind {
            LayoutKind::VqeFull => t * (a + 1) + slack_widths.iter().sum::<usize>(),
            LayoutKind::Vqgap => t * (a + 1),
            LayoutKind::Vqgape => t * code_width,
        };
        Self {
            kind,
            instance: instance.clone(),
            qubit_count,
            slack_widths,
            code_width,
        }
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn instance(&self) -> &GapInstance {
        &self.instance
    }

    pub fn num_tasks(&self) -> usize {
        self.instance.num_tasks
    }

    pub fn num_agents(&self) -> usize {
        self.instance.num_agents
    }

    /// Width of agent `j`'s budget-slack register (VqeFull).
    pub fn slack_width(&self, agent: usize) -> usize {
        self.slack_widths[agent]
    }

    /// Width of each task's agent code (Vqgape).
    pub fn code_width(&self) -> usize {
        self.code_width
    }

    /// Qubit of assignment bit `x[task][agent]` (VqeFull, Vqgap).
    pub fn qubit_of_x(&self, task: usize, agent: usize) -> usize {
        debug_assert!(self.kind != LayoutKind::Vqgape);
        task * (self.num_agents() + 1) + agent
    }

    /// Qubit of the task slack bit `s[task]` (VqeFull, Vqgap).
    pub fn qubit_of_s(&self, task: usize) -> usize {
        debug_assert!(self.kind != LayoutKind::Vqgape);
        task * (self.num_agents() + 1) + self.num_agents()
    }

    /// Qubit of budget-slack bit `k` (weight `2^k`) of agent `j`
    /// (VqeFull only).
    pub fn qubit_of_slack_bit(&self, agent: usize, k: usize) -> usize {
        debug_assert!(self.kind == LayoutKind::VqeFull);
        debug_assert!(k < self.slack_widths[agent]);
        let base = self.num_tasks() * (self.num_agents() + 1);
        base + self.slack_widths[..agent].iter().sum::<usize>() + k
    }

    /// Qubit of code bit `k` (weight `2^k`) of task `i` (Vqgape only).
    pub fn qubit_of_code_bit(&self, task: usize, k: usize) -> usize {
        debug_assert!(self.kind == LayoutKind::Vqgape);
        debug_assert!(k < self.code_width);
        task * self.code_width + k
    }

    fn check_bits(&self, bits: BitString, kind: LayoutKind) -> Result<(), LayoutError> {
        if self.kind != kind {
            return Err(LayoutError::KindMismatch {
                expected: kind,
                got: self.kind,
            });
        }
        if bits.len() != self.qubit_count {
            return Err(LayoutError::BitStringLength {
                got: bits.len(),
                expected: self.qubit_count,
            });
        }
        Ok(())
    }

    /// Reads `x` and `s` directly; residuals are recomputed classically
    /// as `|B[j] - load[j]|`, which restores the budget equality exactly
    /// for budget-feasible assignments and leaves the penalty active for
    /// overloaded agents.
    pub fn decode_vqgap(&self, bits: BitString) -> Result<DecodedVariables, LayoutError> {
        self.check_bits(bits, LayoutKind::Vqgap)?;
        let (x, s) = self.read_assignment_bits(bits);
        let residuals = self.absolute_residuals(&x);
        Ok(DecodedVariables { x, s, residuals })
    }

    /// Decodes each task's agent code. Code 0 and codes above `A` leave
    /// the task unassigned with `s = 1`; every decoded assignment has at
    /// most one agent per task by construction.
    pub fn decode_vqgape(&self, bits: BitString) -> Result<DecodedVariables, LayoutError> {
        self.check_bits(bits, LayoutKind::Vqgape)?;
        let (t, a) = (self.num_tasks(), self.num_agents());
        let mut x = vec![0u8; t * a];
        let mut s = vec![0u8; t];
        for task in 0..t {
            let mut code = 0usize;
            for k in 0..self.code_width {
                code |= (bits.bit(self.qubit_of_code_bit(task, k)) as usize) << k;
            }
            if code >= 1 && code <= a {
                x[task * a + (code - 1)] = 1;
            } else {
                s[task] = 1;
            }
        }
        let residuals = self.absolute_residuals(&x);
        Ok(DecodedVariables { x, s, residuals })
    }

    /// Reads `x`, `s`, and the per-agent budget-slack registers; the
    /// residual of agent `j` is the binary value of its register.
    pub fn decode_vqe_full(&self, bits: BitString) -> Result<DecodedVariables, LayoutError> {
        self.check_bits(bits, LayoutKind::VqeFull)?;
        let (x, s) = self.read_assignment_bits(bits);
        let residuals = (0..self.num_agents())
            .map(|j| {
                (0..self.slack_widths[j])
                    .map(|k| (bits.bit(self.qubit_of_slack_bit(j, k)) as i64) << k)
                    .sum()
            })
            .collect();
        Ok(DecodedVariables { x, s, residuals })
    }

    /// Dispatches to the decoder matching this layout's kind.
    pub fn decode(&self, bits: BitString) -> Result<DecodedVariables, LayoutError> {
        match self.kind {
            LayoutKind::VqeFull => self.decode_vqe_full(bits),
            LayoutKind::Vqgap => self.decode_vqgap(bits),
            LayoutKind::Vqgape => self.decode_vqgape(bits),
        }
    }

    fn read_assignment_bits(&self, bits: BitString) -> (Vec<u8>, Vec<u8>) {
        let (t, a) = (self.num_tasks(), self.num_agents());
        let mut x = vec![0u8; t * a];
        let mut s = vec![0u8; t];
        for task in 0..t {
            for agent in 0..a {
                x[task * a + agent] = bits.bit(self.qubit_of_x(task, agent));
            }
            s[task] = bits.bit(self.qubit_of_s(task));
        }
        (x, s)
    }

    fn absolute_residuals(&self, x: &[u8]) -> Vec<i64> {
        self.instance
            .agent_loads(x)
            .iter()
            .zip(&self.instance.budgets)
            .map(|(load, budget)| (budget - load).abs())
            .collect()
    }
}

/// Problem variables recovered from one measured bitstring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedVariables {
    /// Flat row-major `tasks x agents` assignment bits.
    pub x: Vec<u8>,
    /// Task slack bits.
    pub s: Vec<u8>,
    /// Per-agent residuals (recomputed or read from slack registers).
    pub residuals: Vec<i64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(t: usize, a: usize, budgets: Vec<i64>) -> GapInstance {
        GapInstance {
            num_tasks: t,
            num_agents: a,
            profits: vec![vec![1; a]; t],
            weights: vec![vec![1; a]; t],
            budgets,
        }
    }

    #[test]
    fn qubit_counts_for_reference_problem_sizes() {
        let t4a3 = instance(4, 3, vec![3, 3, 3]);
        let t5a3 = instance(5, 3, vec![3, 3, 3]);
        assert_eq!(
            VariableLayout::new(&t4a3, LayoutKind::VqeFull).qubit_count(),
            22
        );
        assert_eq!(
            VariableLayout::new(&t5a3, LayoutKind::VqeFull).qubit_count(),
            26
        );
        assert_eq!(
            VariableLayout::new(&t4a3, LayoutKind::Vqgap).qubit_count(),
            16
        );
        assert_eq!(
            VariableLayout::new(&t5a3, LayoutKind::Vqgap).qubit_count(),
            20
        );
        assert_eq!(
            VariableLayout::new(&t4a3, LayoutKind::Vqgape).qubit_count(),
            8
        );
        assert_eq!(
            VariableLayout::new(&t5a3, LayoutKind::Vqgape).qubit_count(),
            10
        );
    }

    #[test]
    fn generated_t5a3_instance_with_26_vqe_qubits() {
        // seed chosen so every generated budget needs two slack bits
        let inst = GapInstance::generate(5, 3, 3, 9, 3);
        assert!(inst.budgets.iter().all(|&b| b >= 2));
        let layout = VariableLayout::new(&inst, LayoutKind::VqeFull);
        assert_eq!(layout.qubit_count(), 26);
    }

    #[test]
    fn index_maps_are_bijections() {
        let inst = instance(3, 2, vec![3, 1]);
        for kind in [LayoutKind::VqeFull, LayoutKind::Vqgap, LayoutKind::Vqgape] {
            let layout = VariableLayout::new(&inst, kind);
            let mut seen = vec![false; layout.qubit_count()];
            let mut mark = |q: usize| {
                assert!(q < seen.len());
                assert!(!seen[q], "qubit {q} mapped twice");
                seen[q] = true;
            };
            match kind {
                LayoutKind::Vqgape => {
                    for i in 0..3 {
                        for k in 0..layout.code_width() {
                            mark(layout.qubit_of_code_bit(i, k));
                        }
                    }
                }
                _ => {
                    for i in 0..3 {
                        for j in 0..2 {
                            mark(layout.qubit_of_x(i, j));
                        }
                        mark(layout.qubit_of_s(i));
                    }
                    if kind == LayoutKind::VqeFull {
                        for j in 0..2 {
                            for k in 0..layout.slack_width(j) {
                                mark(layout.qubit_of_slack_bit(j, k));
                            }
                        }
                    }
                }
            }
            assert!(seen.iter().all(|&s| s), "{kind}: not a bijection");
        }
    }

    #[test]
    fn vqgap_decode_of_all_zeros() {
        let inst = instance(2, 2, vec![3, 2]);
        let layout = VariableLayout::new(&inst, LayoutKind::Vqgap);
        let decoded = layout.decode_vqgap(BitString::new(0, 6)).unwrap();
        assert_eq!(decoded.x, vec![0, 0, 0, 0]);
        assert_eq!(decoded.s, vec![0, 0]);
        assert_eq!(decoded.residuals, vec![3, 2]);
    }

    #[test]
    fn vqgap_overloaded_agent_keeps_penalty_active() {
        // agent 0 with budget 2 receives weights 2 and 3
        let inst = GapInstance {
            num_tasks: 2,
            num_agents: 1,
            profits: vec![vec![1], vec![1]],
            weights: vec![vec![2], vec![3]],
            budgets: vec![2],
        };
        let layout = VariableLayout::new(&inst, LayoutKind::Vqgap);
        // x_00 = qubit 0, s_0 = qubit 1, x_10 = qubit 2, s_1 = qubit 3
        let bits = BitString::new(0b0101, 4);
        let decoded = layout.decode_vqgap(bits).unwrap();
        assert_eq!(decoded.residuals, vec![3]);
        let gap = inst.budgets[0] - 5 - decoded.residuals[0];
        assert_eq!(gap * gap, 36);
    }

    #[test]
    fn vqgap_feasible_bitstring_costs_negated_profit() {
        let inst = GapInstance::generate(3, 2, 3, 7, 2);
        let layout = VariableLayout::new(&inst, LayoutKind::Vqgap);
        let sol = inst.brute_force_solve().unwrap();
        let best = &sol.optimal_assignments[0];
        let mut index = 0u64;
        for (i, agent) in best.agent_of_task.iter().enumerate() {
            match agent {
                Some(j) => index |= 1 << layout.qubit_of_x(i, *j),
                None => index |= 1 << layout.qubit_of_s(i),
            }
        }
        let decoded = layout
            .decode_vqgap(BitString::new(index, layout.qubit_count()))
            .unwrap();
        let value = inst
            .extended_objective(&decoded.x, &decoded.s, &decoded.residuals)
            .unwrap();
        assert_eq!(value, -inst.profit(best).unwrap());
        assert_eq!(value, sol.optimal_cost);
    }

    #[test]
    fn vqgape_decode_rules() {
        let a3 = instance(1, 3, vec![1, 1, 1]);
        let layout = VariableLayout::new(&a3, LayoutKind::Vqgape);
        assert_eq!(layout.code_width(), 2);
        // bits (e_0, e_1) = (1, 0) -> code 1 -> first agent
        let decoded = layout.decode_vqgape(BitString::new(0b01, 2)).unwrap();
        assert_eq!(decoded.x, vec![1, 0, 0]);
        assert_eq!(decoded.s, vec![0]);
        // bits (0, 0) -> code 0 -> unassigned
        let decoded = layout.decode_vqgape(BitString::new(0b00, 2)).unwrap();
        assert_eq!(decoded.x, vec![0, 0, 0]);
        assert_eq!(decoded.s, vec![1]);

        // A = 2: code 3 exceeds the agent count -> unassigned
        let a2 = instance(1, 2, vec![1, 1]);
        let layout = VariableLayout::new(&a2, LayoutKind::Vqgape);
        let decoded = layout.decode_vqgape(BitString::new(0b11, 2)).unwrap();
        assert_eq!(decoded.x, vec![0, 0]);
        assert_eq!(decoded.s, vec![1]);
    }

    #[test]
    fn vqgape_every_bitstring_satisfies_the_task_constraint() {
        for (t, a) in [(2, 2), (2, 3), (3, 3), (4, 2)] {
            let inst = instance(t, a, vec![2; a]);
            let layout = VariableLayout::new(&inst, LayoutKind::Vqgape);
            assert!(layout.qubit_count() <= 16);
            for index in 0u64..(1 << layout.qubit_count()) {
                let decoded = layout
                    .decode_vqgape(BitString::new(index, layout.qubit_count()))
                    .unwrap();
                for task in 0..t {
                    let row: u8 = decoded.x[task * a..(task + 1) * a].iter().sum();
                    assert_eq!(row + decoded.s[task], 1);
                }
            }
        }
    }

    #[test]
    fn vqgape_decode_is_bijective_when_agent_count_plus_one_is_a_power_of_two() {
        let inst = instance(3, 3, vec![2, 2, 2]);
        let layout = VariableLayout::new(&inst, LayoutKind::Vqgape);
        let mut patterns = std::collections::HashSet::new();
        for index in 0u64..(1 << layout.qubit_count()) {
            let decoded = layout
                .decode_vqgape(BitString::new(index, layout.qubit_count()))
                .unwrap();
            patterns.insert((decoded.x.clone(), decoded.s.clone()));
        }
        assert_eq!(patterns.len(), 1 << layout.qubit_count());
        assert_eq!(patterns.len(), 4usize.pow(3));
    }

    #[test]
    fn vqe_full_slack_registers_read_little_endian() {
        let inst = instance(1, 1, vec![3]);
        let layout = VariableLayout::new(&inst, LayoutKind::VqeFull);
        assert_eq!(layout.qubit_count(), 4); // x, s, two slack bits
                                             // both register bits set -> residual 3
        let index = (1 << layout.qubit_of_slack_bit(0, 0)) | (1 << layout.qubit_of_slack_bit(0, 1));
        let decoded = layout.decode_vqe_full(BitString::new(index, 4)).unwrap();
        assert_eq!(decoded.residuals, vec![3]);
        // empty register -> residual 0
        let decoded = layout.decode_vqe_full(BitString::new(0, 4)).unwrap();
        assert_eq!(decoded.residuals, vec![0]);
    }

    proptest::proptest! {
        #[test]
        fn qubit_counts_are_ordered_across_layouts(
            t in 1usize..=6,
            a in 1usize..=5,
            max_budget in 1i64..=9,
            seed in 0u64..1000,
        ) {
            let inst = GapInstance::generate(t, a, max_budget, 9, seed);
            let q_e = VariableLayout::new(&inst, LayoutKind::Vqgape).qubit_count();
            let q_g = VariableLayout::new(&inst, LayoutKind::Vqgap).qubit_count();
            let q_f = VariableLayout::new(&inst, LayoutKind::VqeFull).qubit_count();
            proptest::prop_assert!(q_e <= q_g && q_g <= q_f);
        }
    }

    #[test]
    fn decode_checks_length_and_kind() {
        let inst = instance(2, 2, vec![1, 1]);
        let layout = VariableLayout::new(&inst, LayoutKind::Vqgap);
        assert_eq!(
            layout.decode_vqgap(BitString::new(0, 3)),
            Err(LayoutError::BitStringLength {
                got: 3,
                expected: 6
            })
        );
        assert!(matches!(
            layout.decode_vqgape(BitString::new(0, 6)),
            Err(LayoutError::KindMismatch { .. })
        ));
    }
}
