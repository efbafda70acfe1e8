//! Evaluation indices computed from run results, aggregated over
//! repetitions.
//!
//! * `P_feas` / `P_best` — probability that the final measurement
//!   decodes to a constraint-satisfying / optimal-cost solution.
//! * `C_feas` / `C_best` — coefficient of performance: the measured
//!   probability divided by the probability of the same event under
//!   uniform random guessing over the layout's `2^Q` bitstrings.
//! * Percentage errors of the best and expected final costs against the
//!   brute-force optimum of the penalty objective.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driver::{Algorithm, RunResult};
use crate::gap::{BruteForceSolution, GapInstance};
use crate::layout::{DecodedVariables, LayoutKind, VariableLayout};

/// Costs are integer-valued; this tolerance only absorbs float
/// round-off in the VQE path.
const COST_EQ_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot aggregate an empty run list")]
    NoRuns,
    #[error("runs mix configurations: {0} vs {1}")]
    MixedRuns(String, String),
    #[error("exact oracle unavailable: {0}")]
    Oracle(String),
}

/// True iff the decoded variables satisfy both constraint families
/// (at most one agent per task, no agent over budget). Slack variables
/// do not enter the feasibility check.
pub fn feasibility(instance: &GapInstance, decoded: &DecodedVariables) -> bool {
    instance.is_feasible_bits(&decoded.x)
}

/// `P / (N / 2^Q)`: how strongly the sampler amplifies an event class
/// of `N` bitstrings compared to uniform guessing. Undefined for
/// `N = 0`.
pub fn coefficient_of_performance(p: f64, n: u64, q: usize) -> Option<f64> {
    if n == 0 {
        return None;
    }
    Some(p * (1u64 << q) as f64 / n as f64)
}

/// Absolute percentage errors against the oracle cost. When the oracle
/// is zero the percentage is undefined; absolute errors are reported
/// instead and flagged via `relative = false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentageErrors {
    pub best: f64,
    pub expected: f64,
    pub relative: bool,
}

pub fn percentage_errors(run: &RunResult, oracle_cost: f64) -> PercentageErrors {
    if oracle_cost == 0.0 {
        PercentageErrors {
            best: (run.best_cost - oracle_cost).abs(),
            expected: (run.expected_cost - oracle_cost).abs(),
            relative: false,
        }
    } else {
        PercentageErrors {
            best: 100.0 * (run.best_cost - oracle_cost).abs() / oracle_cost.abs(),
            expected: 100.0 * (run.expected_cost - oracle_cost).abs() / oracle_cost.abs(),
            relative: true,
        }
    }
}

/// Counts of optimal-cost and feasible bitstrings in one layout's
/// `2^Q` space.
///
/// Counting is layout-aware: assignment patterns are enumerated once
/// and multiplied by the number of bitstrings mapping onto them, never
/// by scanning `2^Q` raw strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceCounts {
    pub qubit_count: usize,
    pub n_best: u64,
    pub n_feas: u64,
}

pub fn solution_space_counts(
    instance: &GapInstance,
    layout: &VariableLayout,
    oracle: &BruteForceSolution,
) -> SpaceCounts {
    let (t, a) = (instance.num_tasks, instance.num_agents);
    let q = layout.qubit_count();
    // Free bits multiply every pattern:
    // - Vqgap: the T task-slack bits never affect feasibility;
    // - VqeFull: task slacks plus every budget-slack register bit.
    // Optimal *cost* additionally forces consistent slacks, so each
    // optimal pattern is hit by exactly one bitstring in those layouts.
    let free_bits = match layout.kind() {
        LayoutKind::Vqgap => t,
        LayoutKind::VqeFull => t + (0..a).map(|j| layout.slack_width(j)).sum::<usize>(),
        LayoutKind::Vqgape => 0,
    };
    // Vqgape: codes 0 and A+1..2^m-1 all decode to "unassigned".
    let unassigned_codes = (1u64 << layout.code_width()) - a as u64;

    let mut n_best = 0u64;
    let mut n_feas = 0u64;
    let mut digits = vec![0usize; t];
    'patterns: loop {
        let mut loads = vec![0i64; a];
        let mut profit = 0i64;
        for (i, &d) in digits.iter().enumerate() {
            if d > 0 {
                loads[d - 1] += instance.weights[i][d - 1];
                profit += instance.profits[i][d - 1];
            }
        }
        if loads.iter().zip(&instance.budgets).all(|(l, b)| l <= b) {
            let multiplicity = match layout.kind() {
                LayoutKind::Vqgape => digits
                    .iter()
                    .map(|&d| if d == 0 { unassigned_codes } else { 1 })
                    .product::<u64>(),
                _ => 1u64 << free_bits,
            };
            n_feas += multiplicity;
            if -profit == oracle.optimal_cost {
                // optimal cost requires consistent slack variables
                let best_multiplicity = match layout.kind() {
                    LayoutKind::Vqgape => digits
                        .iter()
                        .map(|&d| if d == 0 { unassigned_codes } else { 1 })
                        .product::<u64>(),
                    _ => 1,
                };
                n_best += best_multiplicity;
            }
        }
        let mut pos = 0;
        loop {
            if pos == t {
                break 'patterns;
            }
            digits[pos] += 1;
            if digits[pos] <= a {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
    SpaceCounts {
        qubit_count: q,
        n_best,
        n_feas,
    }
}

/// Metrics of a single repetition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub p_feas: f64,
    pub p_best: f64,
    pub c_feas: Option<f64>,
    pub c_best: Option<f64>,
    pub best_error: f64,
    pub expected_error: f64,
    pub relative_errors: bool,
    pub best_cost: f64,
    pub expected_cost: f64,
    pub initial_cost: f64,
}

pub fn run_metrics(
    run: &RunResult,
    instance: &GapInstance,
    counts: &SpaceCounts,
    oracle_cost: f64,
) -> RunMetrics {
    let layout = VariableLayout::new(instance, run.config.algorithm.layout_kind());
    let shots = run.final_histogram.total_shots() as f64;
    let mut feasible_shots = 0u64;
    let mut best_shots = 0u64;
    for (bits, count) in run.final_histogram.iter() {
        let decoded = layout.decode(bits).expect("histogram matches layout");
        if feasibility(instance, &decoded) {
            feasible_shots += count;
        }
        let cost = run.bitstring_costs[&bits];
        if (cost - oracle_cost).abs() <= COST_EQ_TOLERANCE {
            best_shots += count;
        }
    }
    let p_feas = feasible_shots as f64 / shots;
    let p_best = best_shots as f64 / shots;
    let errors = percentage_errors(run, oracle_cost);
    RunMetrics {
        p_feas,
        p_best,
        c_feas: coefficient_of_performance(p_feas, counts.n_feas, counts.qubit_count),
        c_best: coefficient_of_performance(p_best, counts.n_best, counts.qubit_count),
        best_error: errors.best,
        expected_error: errors.expected,
        relative_errors: errors.relative,
        best_cost: run.best_cost,
        expected_cost: run.expected_cost,
        initial_cost: run.initial_cost,
    }
}

/// Mean / population standard deviation / extremes over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Aggregated metrics of one algorithm over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub algorithm: Algorithm,
    pub ansatz: String,
    pub esu2_reps: Option<usize>,
    pub shots: u64,
    pub noise_p1: f64,
    pub noise_p2: f64,
    pub qubit_count: usize,
    pub parameter_count: usize,
    pub two_qubit_gate_count: usize,
    pub two_qubit_depth: usize,
    pub n_best: u64,
    pub n_feas: u64,
    pub oracle_cost: f64,
    pub runs: usize,
    pub p_feas: SummaryStat,
    pub p_best: SummaryStat,
    pub c_feas: Option<SummaryStat>,
    pub c_best: Option<SummaryStat>,
    pub best_error: SummaryStat,
    pub expected_error: SummaryStat,
    pub relative_errors: bool,
    pub per_run: Vec<RunMetrics>,
}

impl MetricsReport {
    /// Header of the aggregate CSV row.
    pub fn csv_header() -> &'static str {
        "algorithm,ansatz,reps,shots,noise_p1,noise_p2,Q,theta,g2,d2,\
         P_feas_mean,P_feas_std,C_feas_mean,C_best_mean,best_err_pct_mean,exp_err_pct_mean,runs"
    }

    pub fn to_csv_row(&self) -> String {
        let opt = |stat: &Option<SummaryStat>| match stat {
            Some(s) => s.mean.to_string(),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.ansatz,
            self.esu2_reps.map(|r| r.to_string()).unwrap_or_default(),
            self.shots,
            self.noise_p1,
            self.noise_p2,
            self.qubit_count,
            self.parameter_count,
            self.two_qubit_gate_count,
            self.two_qubit_depth,
            self.p_feas.mean,
            self.p_feas.std,
            opt(&self.c_feas),
            opt(&self.c_best),
            self.best_error.mean,
            self.expected_error.mean,
            self.runs,
        )
    }
}

/// Computes per-run metrics and their summary statistics. All runs must
/// share the same algorithm/ansatz pairing over the same instance.
pub fn aggregate(
    runs: &[RunResult],
    instance: &GapInstance,
) -> Result<MetricsReport, MetricsError> {
    let first = runs.first().ok_or(MetricsError::NoRuns)?;
    for run in runs {
        // everything but the per-repetition seed must match
        let mut shape = run.config.clone();
        shape.seed = first.config.seed;
        if shape != first.config {
            return Err(MetricsError::MixedRuns(
                format!("{}/{}", first.config.algorithm, first.config.ansatz),
                format!("{}/{}", run.config.algorithm, run.config.ansatz),
            ));
        }
    }
    let oracle = instance
        .brute_force_solve()
        .map_err(|e| MetricsError::Oracle(e.to_string()))?;
    let layout = VariableLayout::new(instance, first.config.algorithm.layout_kind());
    let counts = solution_space_counts(instance, &layout, &oracle);
    let oracle_cost = oracle.optimal_cost as f64;
    let per_run: Vec<RunMetrics> = runs
        .iter()
        .map(|run| run_metrics(run, instance, &counts, oracle_cost))
        .collect();

    let collect = |f: fn(&RunMetrics) -> f64| -> Vec<f64> { per_run.iter().map(f).collect() };
    let c_feas: Vec<f64> = per_run.iter().filter_map(|m| m.c_feas).collect();
    let c_best: Vec<f64> = per_run.iter().filter_map(|m| m.c_best).collect();
    let (p1, p2) = first
        .config
        .noise
        .map(|n| (n.p1, n.p2))
        .unwrap_or((0.0, 0.0));
    Ok(MetricsReport {
        algorithm: first.config.algorithm,
        ansatz: first.config.ansatz.to_string(),
        esu2_reps: first.descriptor.esu2_reps,
        shots: first.config.shots,
        noise_p1: p1,
        noise_p2: p2,
        qubit_count: first.qubit_count,
        parameter_count: first.descriptor.parameter_count,
        two_qubit_gate_count: first.descriptor.two_qubit_gate_count,
        two_qubit_depth: first.descriptor.two_qubit_depth,
        n_best: counts.n_best,
        n_feas: counts.n_feas,
        oracle_cost,
        runs: runs.len(),
        p_feas: SummaryStat::of(&collect(|m| m.p_feas)),
        p_best: SummaryStat::of(&collect(|m| m.p_best)),
        c_feas: (!c_feas.is_empty()).then(|| SummaryStat::of(&c_feas)),
        c_best: (!c_best.is_empty()).then(|| SummaryStat::of(&c_best)),
        best_error: SummaryStat::of(&collect(|m| m.best_error)),
        expected_error: SummaryStat::of(&collect(|m| m.expected_error)),
        relative_errors: per_run.iter().all(|m| m.relative_errors),
        per_run,
    })
}
