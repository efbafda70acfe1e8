//! Generalized assignment problem instances, objectives, and the exact
//! classical solver used as the reference oracle.
//!
//! An instance assigns each of `T` tasks to at most one of `A` agents.
//! Assigning task `i` to agent `j` yields profit `p[i][j]` and consumes
//! `w[i][j]` units of agent `j`'s budget `B[j]`. The constrained problem
//! is turned into an unconstrained one by the penalty objective: slack
//! bits `s_i` absorb the per-task inequality, residuals `r_j` absorb the
//! budget inequality, and any violated equality contributes at least the
//! penalty constant `C`, which exceeds every achievable profit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, purpose};
use rand::Rng;

/// A GAP instance: `tasks x agents` profit and weight matrices plus one
/// budget per agent. Profits are non-negative integers, weights and
/// budgets strictly positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapInstance {
    #[serde(rename = "tasks")]
    pub num_tasks: usize,
    #[serde(rename = "agents")]
    pub num_agents: usize,
    /// Row-major `tasks x agents`: `profits[i][j]` is the profit of
    /// assigning task `i` to agent `j`.
    pub profits: Vec<Vec<i64>>,
    /// Row-major `tasks x agents`: `weights[i][j]` is the budget consumed
    /// on agent `j` by task `i`.
    pub weights: Vec<Vec<i64>>,
    /// One budget per agent.
    pub budgets: Vec<i64>,
}

/// A single violated instance invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}{}: {message}", location(index))]
pub struct ValidationIssue {
    pub field: &'static str,
    pub index: Option<(usize, Option<usize>)>,
    pub message: String,
}

fn location(index: &Option<(usize, Option<usize>)>) -> String {
    match index {
        Some((i, Some(j))) => format!("[{i}][{j}]"),
        Some((i, None)) => format!("[{i}]"),
        None => String::new(),
    }
}

impl ValidationIssue {
    fn new(field: &'static str, index: Option<(usize, Option<usize>)>, message: String) -> Self {
        Self {
            field,
            index,
            message,
        }
    }
}

impl std::fmt::Display for GapInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GAP {}x{}", self.num_tasks, self.num_agents)
    }
}

#[derive(Debug, Error)]
pub enum GapError {
    #[error("dimension mismatch for {what}: got {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("residual r[{agent}] = {value} is negative")]
    NegativeResidual { agent: usize, value: i64 },
    #[error("instance too large to enumerate: ({0}+1)^{1} patterns exceed {max}", max = MAX_ENUMERATION)]
    EnumerationTooLarge(usize, usize),
    #[error("invalid instance: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationIssue>),
}

/// Enumeration guard for [`GapInstance::brute_force_solve`].
pub const MAX_ENUMERATION: u64 = 10_000_000;

impl GapInstance {
    /// Checks every structural invariant and returns all violations.
    pub fn validate(&self) -> Result<(), Vec<ValidationIssue>> {
        let mut issues = Vec::new();
        let (t, a) = (self.num_tasks, self.num_agents);
        if t == 0 {
            issues.push(ValidationIssue::new("tasks", None, "must be >= 1".into()));
        }
        if a == 0 {
            issues.push(ValidationIssue::new("agents", None, "must be >= 1".into()));
        }
        for (name, matrix) in [("profits", &self.profits), ("weights", &self.weights)] {
            if matrix.len() != t {
                issues.push(ValidationIssue::new(
                    name,
                    None,
                    format!("has {} rows, expected {}", matrix.len(), t),
                ));
            }
            for (i, row) in matrix.iter().enumerate() {
                if row.len() != a {
                    issues.push(ValidationIssue::new(
                        name,
                        Some((i, None)),
                        format!("row has {} columns, expected {}", row.len(), a),
                    ));
                }
            }
        }
        if self.budgets.len() != a {
            issues.push(ValidationIssue::new(
                "budgets",
                None,
                format!("has {} entries, expected {}", self.budgets.len(), a),
            ));
        }
        for (i, row) in self.profits.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if p < 0 {
                    issues.push(ValidationIssue::new(
                        "profits",
                        Some((i, Some(j))),
                        format!("{p} is negative"),
                    ));
                }
            }
        }
        for (i, row) in self.weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w < 1 {
                    issues.push(ValidationIssue::new(
                        "weights",
                        Some((i, Some(j))),
                        format!("{w} is not positive"),
                    ));
                }
            }
        }
        for (j, &b) in self.budgets.iter().enumerate() {
            if b < 1 {
                issues.push(ValidationIssue::new(
                    "budgets",
                    Some((j, None)),
                    format!("{b} is not positive"),
                ));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Sum of all profits; the penalty constant is this plus one.
    pub fn total_profit(&self) -> i64 {
        self.profits.iter().flatten().sum()
    }

    /// Profit of an assignment: sum of `p[i][j]` over assigned pairs.
    pub fn profit(&self, assignment: &Assignment) -> Result<i64, GapError> {
        if assignment.agent_of_task.len() != self.num_tasks {
            return Err(GapError::DimensionMismatch {
                what: "assignment",
                got: assignment.agent_of_task.len(),
                expected: self.num_tasks,
            });
        }
        let mut total = 0;
        for (i, agent) in assignment.agent_of_task.iter().enumerate() {
            if let Some(j) = agent {
                if *j >= self.num_agents {
                    return Err(GapError::DimensionMismatch {
                        what: "agent index",
                        got: *j,
                        expected: self.num_agents,
                    });
                }
                total += self.profits[i][*j];
            }
        }
        Ok(total)
    }

    /// Budget consumed on each agent by a flat row-major assignment-bit
    /// matrix (`tasks x agents`).
    pub fn agent_loads(&self, x: &[u8]) -> Vec<i64> {
        let mut loads = vec![0i64; self.num_agents];
        for i in 0..self.num_tasks {
            for j in 0..self.num_agents {
                if x[i * self.num_agents + j] != 0 {
                    loads[j] += self.weights[i][j];
                }
            }
        }
        loads
    }

    /// True iff the bits satisfy both constraint families: at most one
    /// agent per task, and no agent over budget.
    pub fn is_feasible_bits(&self, x: &[u8]) -> bool {
        for i in 0..self.num_tasks {
            let row: u8 = x[i * self.num_agents..(i + 1) * self.num_agents]
                .iter()
                .sum();
            if row > 1 {
                return false;
            }
        }
        self.agent_loads(x)
            .iter()
            .zip(&self.budgets)
            .all(|(load, budget)| load <= budget)
    }

    /// The unconstrained penalty objective:
    ///
    /// ```text
    /// -sum p[i][j] x[i][j]
    ///   + C * sum_i (1 - sum_j x[i][j] - s[i])^2
    ///   + C * sum_j (B[j] - sum_i w[i][j] x[i][j] - r[j])^2
    /// ```
    ///
    /// Both penalty sums vanish exactly when the slack variables restore
    /// the equality constraints. Evaluated in exact integer arithmetic.
    ///
    /// `x` is flat row-major `tasks x agents`; `s` has one bit per task;
    /// `r` has one non-negative residual per agent.
    pub fn extended_objective(&self, x: &[u8], s: &[u8], r: &[i64]) -> Result<i64, GapError> {
        let (t, a) = (self.num_tasks, self.num_agents);
        if x.len() != t * a {
            return Err(GapError::DimensionMismatch {
                what: "x",
                got: x.len(),
                expected: t * a,
            });
        }
        if s.len() != t {
            return Err(GapError::DimensionMismatch {
                what: "s",
                got: s.len(),
                expected: t,
            });
        }
        if r.len() != a {
            return Err(GapError::DimensionMismatch {
                what: "r",
                got: r.len(),
                expected: a,
            });
        }
        if let Some((j, &value)) = r.iter().enumerate().find(|(_, &v)| v < 0) {
            return Err(GapError::NegativeResidual { agent: j, value });
        }
        let c = PenaltyObjective::for_instance(self).constant;
        let mut value = 0i64;
        for i in 0..t {
            let mut row_sum = 0i64;
            for j in 0..a {
                if x[i * a + j] != 0 {
                    value -= self.profits[i][j];
                    row_sum += 1;
                }
            }
            let gap = 1 - row_sum - s[i] as i64;
            value += c * gap * gap;
        }
        let loads = self.agent_loads(x);
        for ((budget, load), residual) in self.budgets.iter().zip(&loads).zip(r) {
            let gap = budget - load - residual;
            value += c * gap * gap;
        }
        Ok(value)
    }

    /// Enumerates every one-agent-per-task pattern (including "unassigned")
    /// and returns the exact optimum of the penalty objective, which for
    /// feasible patterns equals minus the profit.
    pub fn brute_force_solve(&self) -> Result<BruteForceSolution, GapError> {
        self.validate().map_err(GapError::Invalid)?;
        let (t, a) = (self.num_tasks, self.num_agents);
        let radix = a as u64 + 1;
        let patterns = (radix as f64).powi(t as i32);
        if patterns > MAX_ENUMERATION as f64 {
            return Err(GapError::EnumerationTooLarge(a, t));
        }

        let mut best_profit = i64::MIN;
        let mut optimal = Vec::new();
        let mut feasible_count = 0u64;
        let mut digits = vec![0usize; t];
        loop {
            // digit 0 = unassigned, digit d = agent d-1
            let mut loads = vec![0i64; a];
            let mut profit = 0i64;
            for (i, &d) in digits.iter().enumerate() {
                if d > 0 {
                    let j = d - 1;
                    loads[j] += self.weights[i][j];
                    profit += self.profits[i][j];
                }
            }
            let feasible = loads.iter().zip(&self.budgets).all(|(l, b)| l <= b);
            if feasible {
                feasible_count += 1;
                if profit > best_profit {
                    best_profit = profit;
                    optimal.clear();
                }
                if profit == best_profit {
                    optimal.push(Assignment {
                        agent_of_task: digits
                            .iter()
                            .map(|&d| if d == 0 { None } else { Some(d - 1) })
                            .collect(),
                    });
                }
            }
            // advance the mixed-radix counter
            let mut pos = 0;
            loop {
                if pos == t {
                    return Ok(BruteForceSolution {
                        optimal_cost: -best_profit,
                        optimal_assignments: optimal,
                        feasible_count,
                    });
                }
                digits[pos] += 1;
                if digits[pos] <= a {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Draws a random instance with independent uniform integer entries:
    /// weights and budgets in `1..=max_budget`, profits in `1..=max_profit`.
    /// Deterministic for a fixed seed.
    pub fn generate(
        num_tasks: usize,
        num_agents: usize,
        max_budget: i64,
        max_profit: i64,
        seed: u64,
    ) -> Self {
        assert!(num_tasks >= 1 && num_agents >= 1, "dimensions must be >= 1");
        assert!(max_budget >= 1 && max_profit >= 1, "bounds must be >= 1");
        let mut rng = rng::seeded_rng(seed, rng::stream_id(purpose::INSTANCE, 0, 0));
        let mut matrix = |upper: i64| -> Vec<Vec<i64>> {
            (0..num_tasks)
                .map(|_| {
                    (0..num_agents)
                        .map(|_| rng.random_range(1..=upper))
                        .collect()
                })
                .collect()
        };
        let profits = matrix(max_profit);
        let weights = matrix(max_budget);
        let budgets = (0..num_agents)
            .map(|_| rng.random_range(1..=max_budget))
            .collect();
        Self {
            num_tasks,
            num_agents,
            profits,
            weights,
            budgets,
        }
    }
}

/// One agent (or none) per task; the classical solution representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// `agent_of_task[i]` is the 0-based agent index, or `None` when task
    /// `i` is unassigned.
    pub agent_of_task: Vec<Option<usize>>,
}

impl Assignment {
    /// Flat row-major assignment bits (`tasks x agents`).
    pub fn to_bits(&self, num_agents: usize) -> Vec<u8> {
        let mut x = vec![0u8; self.agent_of_task.len() * num_agents];
        for (i, agent) in self.agent_of_task.iter().enumerate() {
            if let Some(j) = agent {
                x[i * num_agents + j] = 1;
            }
        }
        x
    }

    /// Task slack bits: 1 exactly for unassigned tasks.
    pub fn slack_bits(&self) -> Vec<u8> {
        self.agent_of_task
            .iter()
            .map(|a| if a.is_none() { 1 } else { 0 })
            .collect()
    }

    /// Residual budgets `B[j] - load[j]`; non-negative iff the assignment
    /// respects every budget.
    pub fn residuals(&self, instance: &GapInstance) -> Vec<i64> {
        let loads = instance.agent_loads(&self.to_bits(instance.num_agents));
        instance
            .budgets
            .iter()
            .zip(loads)
            .map(|(b, load)| b - load)
            .collect()
    }

    pub fn is_feasible(&self, instance: &GapInstance) -> bool {
        self.residuals(instance).iter().all(|&r| r >= 0)
    }
}

/// Penalty constant `C = 1 + sum of all profits`: large enough that a
/// single violated constraint costs more than any profit can recoup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenaltyObjective {
    pub constant: i64,
}

impl PenaltyObjective {
    pub fn for_instance(instance: &GapInstance) -> Self {
        Self {
            constant: 1 + instance.total_profit(),
        }
    }
}

/// Output of the exhaustive solver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BruteForceSolution {
    /// Minimum of the penalty objective = -(maximum feasible profit).
    pub optimal_cost: i64,
    /// Every pattern achieving the optimum.
    pub optimal_assignments: Vec<Assignment>,
    /// Number of feasible one-agent-per-task patterns.
    pub feasible_count: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(p: i64, w: i64, b: i64) -> GapInstance {
        GapInstance {
            num_tasks: 1,
            num_agents: 1,
            profits: vec![vec![p]],
            weights: vec![vec![w]],
            budgets: vec![b],
        }
    }

    fn two_by_two() -> GapInstance {
        GapInstance {
            num_tasks: 2,
            num_agents: 2,
            profits: vec![vec![3, 1], vec![2, 4]],
            weights: vec![vec![1, 2], vec![2, 1]],
            budgets: vec![2, 2],
        }
    }

    #[test]
    fn validate_accepts_well_formed_instance() {
        assert!(two_by_two().validate().is_ok());
    }

    #[test]
    fn validate_reports_row_length_mismatch() {
        let mut inst = two_by_two();
        inst.weights[0] = vec![1, 2, 3];
        let issues = inst.validate().unwrap_err();
        assert!(issues
            .iter()
            .any(|i| i.field == "weights" && i.index == Some((0, None))));
    }

    #[test]
    fn validate_reports_nonpositive_budget() {
        let inst = tiny(3, 1, 0);
        let issues = inst.validate().unwrap_err();
        assert!(issues.iter().any(|i| i.field == "budgets"));
    }

    #[test]
    fn profit_of_empty_assignment_is_zero() {
        let inst = two_by_two();
        let none = Assignment {
            agent_of_task: vec![None, None],
        };
        assert_eq!(inst.profit(&none).unwrap(), 0);
    }

    #[test]
    fn profit_of_single_term() {
        let inst = GapInstance {
            num_tasks: 1,
            num_agents: 2,
            profits: vec![vec![2, 5]],
            weights: vec![vec![1, 1]],
            budgets: vec![1, 1],
        };
        let a = Assignment {
            agent_of_task: vec![Some(1)],
        };
        assert_eq!(inst.profit(&a).unwrap(), 5);
    }

    #[test]
    fn profit_matches_independent_resummation() {
        let inst = GapInstance::generate(4, 3, 5, 9, 11);
        // a feasible-looking random pattern
        let a = Assignment {
            agent_of_task: vec![Some(0), None, Some(2), Some(1)],
        };
        // oracle: re-sum through the bit matrix, independent of profit()
        let bits = a.to_bits(3);
        let mut expected = 0;
        for i in 0..4 {
            for j in 0..3 {
                expected += inst.profits[i][j] * bits[i * 3 + j] as i64;
            }
        }
        assert_eq!(inst.profit(&a).unwrap(), expected);
    }

    #[test]
    fn extended_objective_zero_when_all_unassigned() {
        let inst = two_by_two();
        let x = [0, 0, 0, 0];
        let s = [1, 1];
        let r: Vec<i64> = inst.budgets.clone();
        assert_eq!(inst.extended_objective(&x, &s, &r).unwrap(), 0);
    }

    #[test]
    fn extended_objective_task_penalty_fires_on_double_assignment() {
        let inst = GapInstance {
            num_tasks: 1,
            num_agents: 2,
            profits: vec![vec![2, 5]],
            weights: vec![vec![1, 1]],
            budgets: vec![3, 3],
        };
        let c = PenaltyObjective::for_instance(&inst).constant;
        let x = [1, 1];
        let s = [0];
        let r = [2, 2]; // B - sum(w x) per agent
        let value = inst.extended_objective(&x, &s, &r).unwrap();
        // (1 - 2 - 0)^2 = 1, so the value is at least C minus the profits
        assert!(value >= c - 7);
        assert_eq!(value, -7 + c);
    }

    #[test]
    fn extended_objective_rejects_negative_residual() {
        let inst = tiny(3, 1, 1);
        let err = inst.extended_objective(&[1], &[0], &[-1]).unwrap_err();
        assert!(matches!(err, GapError::NegativeResidual { agent: 0, .. }));
    }

    #[test]
    fn extended_objective_rejects_dimension_mismatch() {
        let inst = two_by_two();
        assert!(inst.extended_objective(&[0, 0], &[1, 1], &[2, 2]).is_err());
    }

    #[test]
    fn brute_force_single_profitable_task_fits() {
        let sol = tiny(3, 1, 1).brute_force_solve().unwrap();
        assert_eq!(sol.optimal_cost, -3);
        assert_eq!(sol.optimal_assignments.len(), 1);
        assert_eq!(sol.optimal_assignments[0].agent_of_task, vec![Some(0)]);
    }

    #[test]
    fn brute_force_task_that_cannot_fit() {
        let sol = tiny(3, 2, 1).brute_force_solve().unwrap();
        assert_eq!(sol.optimal_cost, 0);
        assert_eq!(sol.optimal_assignments[0].agent_of_task, vec![None]);
    }

    #[test]
    fn brute_force_optimum_equals_negated_extended_objective() {
        let inst = two_by_two();
        let sol = inst.brute_force_solve().unwrap();
        for best in &sol.optimal_assignments {
            let x = best.to_bits(inst.num_agents);
            let s = best.slack_bits();
            let r = best.residuals(&inst);
            assert_eq!(
                inst.extended_objective(&x, &s, &r).unwrap(),
                sol.optimal_cost
            );
        }
    }

    #[test]
    fn extended_objective_equals_negated_profit_on_all_feasible_patterns() {
        let inst = GapInstance::generate(3, 2, 3, 7, 5);
        let radix = inst.num_agents + 1;
        for code in 0..radix.pow(inst.num_tasks as u32) {
            let mut c = code;
            let assignment = Assignment {
                agent_of_task: (0..inst.num_tasks)
                    .map(|_| {
                        let d = c % radix;
                        c /= radix;
                        if d == 0 {
                            None
                        } else {
                            Some(d - 1)
                        }
                    })
                    .collect(),
            };
            if assignment.is_feasible(&inst) {
                let x = assignment.to_bits(inst.num_agents);
                let value = inst
                    .extended_objective(&x, &assignment.slack_bits(), &assignment.residuals(&inst))
                    .unwrap();
                assert_eq!(value, -inst.profit(&assignment).unwrap());
            }
        }
    }

    #[test]
    fn any_violation_costs_more_than_any_feasible_value() {
        // For every x-bit pattern that violates a constraint, the best
        // achievable penalty value (minimizing over s and r domains)
        // still exceeds every feasible pattern's value.
        let inst = two_by_two();
        let sol = inst.brute_force_solve().unwrap();
        let worst_feasible = 0; // all-unassigned is always feasible with value 0
        for bits in 0u32..(1 << (inst.num_tasks * inst.num_agents)) {
            let x: Vec<u8> = (0..inst.num_tasks * inst.num_agents)
                .map(|k| ((bits >> k) & 1) as u8)
                .collect();
            if inst.is_feasible_bits(&x) {
                continue;
            }
            // choose s and r minimizing their penalty terms
            let s: Vec<u8> = (0..inst.num_tasks)
                .map(|i| {
                    let row: i64 = (0..inst.num_agents).map(|j| x[i * 2 + j] as i64).sum();
                    (1 - row).clamp(0, 1) as u8
                })
                .collect();
            let loads = inst.agent_loads(&x);
            let r: Vec<i64> = inst
                .budgets
                .iter()
                .zip(&loads)
                .map(|(b, load)| (b - load).max(0))
                .collect();
            let value = inst.extended_objective(&x, &s, &r).unwrap();
            assert!(value > -(-sol.optimal_cost));
            assert!(value > worst_feasible);
        }
    }

    #[test]
    fn brute_force_cost_lower_bounds_every_pattern() {
        let inst = GapInstance::generate(3, 3, 3, 6, 21);
        let sol = inst.brute_force_solve().unwrap();
        let radix = inst.num_agents + 1;
        for code in 0..radix.pow(inst.num_tasks as u32) {
            let mut c = code;
            let assignment = Assignment {
                agent_of_task: (0..inst.num_tasks)
                    .map(|_| {
                        let d = c % radix;
                        c /= radix;
                        if d == 0 {
                            None
                        } else {
                            Some(d - 1)
                        }
                    })
                    .collect(),
            };
            if !assignment.is_feasible(&inst) {
                continue;
            }
            let x = assignment.to_bits(inst.num_agents);
            let value = inst
                .extended_objective(&x, &assignment.slack_bits(), &assignment.residuals(&inst))
                .unwrap();
            assert!(sol.optimal_cost <= value);
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let a = GapInstance::generate(4, 3, 3, 9, 7);
        let b = GapInstance::generate(4, 3, 3, 9, 7);
        assert_eq!(a, b);
        let c = GapInstance::generate(4, 3, 3, 9, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn generate_respects_bounds_and_validates() {
        for seed in 0..20 {
            let inst = GapInstance::generate(5, 3, 3, 9, seed);
            assert!(inst.validate().is_ok());
            assert!(inst.weights.iter().flatten().all(|&w| (1..=3).contains(&w)));
            assert!(inst.budgets.iter().all(|&b| (1..=3).contains(&b)));
            assert!(inst.profits.iter().flatten().all(|&p| (1..=9).contains(&p)));
        }
    }

    #[test]
    fn penalty_constant_is_one_plus_total_profit() {
        let inst = two_by_two();
        assert_eq!(PenaltyObjective::for_instance(&inst).constant, 1 + 10);
    }

    #[test]
    fn enumeration_guard_rejects_huge_instances() {
        let inst = GapInstance::generate(30, 9, 3, 5, 1);
        assert!(matches!(
            inst.brute_force_solve(),
            Err(GapError::EnumerationTooLarge(..))
        ));
    }
}
