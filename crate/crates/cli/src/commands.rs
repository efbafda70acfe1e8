//! Implementations of the `vqgap` subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use vqgap_core::driver::{self, RunResult};
use vqgap_core::gap::GapInstance;
use vqgap_core::layout::{LayoutKind, VariableLayout};
use vqgap_core::metrics::{self, MetricsReport};

use crate::config::{
    validate_instance, AlgorithmSelection, ExperimentConfig, GenerateSpec, InstanceSource,
};
use crate::output::{write_atomic, write_json, write_run_result};
use crate::CliError;

/// Generates a random instance file. Refuses to overwrite an existing
/// file unless `force` is set. Returns a one-line summary.
pub fn cmd_generate(spec: &GenerateSpec, out: &Path, force: bool) -> Result<String, CliError> {
    spec.validate().map_err(CliError::usage)?;
    if out.exists() && !force {
        return Err(CliError::usage(format!(
            "{} exists; pass --force to overwrite",
            out.display()
        )));
    }
    let instance = spec.build();
    write_json(out, &instance)?;
    let q = VariableLayout::new(&instance, LayoutKind::VqeFull).qubit_count();
    Ok(format!(
        "wrote {} ({} tasks x {} agents, {q} qubits in the full layout)",
        out.display(),
        spec.tasks,
        spec.agents
    ))
}

/// Solves an instance exactly and reports the optimum plus per-layout
/// solution-space counts. Returns the text to print.
pub fn cmd_solve(instance_path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(instance_path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", instance_path.display())))?;
    let instance: GapInstance = serde_json::from_str(&text).map_err(|e| {
        CliError::usage(format!("invalid instance {}: {e}", instance_path.display()))
    })?;
    validate_instance(&instance)?;
    let solution = instance
        .brute_force_solve()
        .map_err(|e| CliError::runtime(e.to_string()))?;

    let mut lines = Vec::new();
    lines.push(format!("optimal cost: {}", solution.optimal_cost));
    let best = &solution.optimal_assignments[0];
    let rendered: Vec<String> = best
        .agent_of_task
        .iter()
        .enumerate()
        .map(|(task, agent)| match agent {
            Some(j) => format!("task {task} -> agent {j}"),
            None => format!("task {task} -> unassigned"),
        })
        .collect();
    lines.push(format!("optimal assignment: {}", rendered.join(", ")));
    lines.push(format!(
        "optimal assignments: {}, feasible patterns: {}",
        solution.optimal_assignments.len(),
        solution.feasible_count
    ));

    let mut layouts = BTreeMap::new();
    for kind in [LayoutKind::VqeFull, LayoutKind::Vqgap, LayoutKind::Vqgape] {
        let layout = VariableLayout::new(&instance, kind);
        let counts = metrics::solution_space_counts(&instance, &layout, &solution);
        lines.push(format!(
            "layout {kind}: Q={}, N_best={}, N_feas={}",
            counts.qubit_count, counts.n_best, counts.n_feas
        ));
        layouts.insert(
            kind.to_string(),
            json!({
                "qubit_count": counts.qubit_count,
                "n_best": counts.n_best,
                "n_feas": counts.n_feas,
            }),
        );
    }
    let payload = json!({
        "optimal_cost": solution.optimal_cost,
        "optimal_assignments": solution.optimal_assignments,
        "feasible_patterns": solution.feasible_count,
        "layouts": layouts,
    });
    lines.push(serde_json::to_string_pretty(&payload).expect("serializable"));
    Ok(lines.join("\n"))
}

/// Per-algorithm outcome of an experiment.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub reports: Vec<MetricsReport>,
    /// `(label, repetition, error)` triples for failed repetitions.
    pub failures: Vec<(String, u64, String)>,
}

/// Runs a whole experiment config: every algorithm times every
/// repetition, dispatched over a worker pool, with one result JSON per
/// repetition, one report CSV per algorithm, and a combined comparison
/// CSV.
pub fn cmd_run(
    config_path: &Path,
    out_override: Option<&Path>,
    jobs: usize,
) -> Result<RunSummary, CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| {
            CliError::usage("no output directory: set output_dir in the config or pass --out")
        })?;
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let instance = config.resolve_instance(base_dir)?;
    std::fs::create_dir_all(&out_dir)?;
    // the config travels verbatim with its outputs
    let original = std::fs::read(config_path)?;
    write_atomic(&out_dir.join("config.json"), &original)?;
    write_json(&out_dir.join("instance.json"), &instance)?;
    write_atomic(&out_dir.join("conventions.txt"), CONVENTIONS.as_bytes())?;
    run_experiment(&config, &instance, &out_dir, jobs)
}

/// Self-description dropped into every output directory.
const CONVENTIONS: &str = "Bitstrings list qubit 0 as the first character; a bitstring's basis
index has qubit 0 as its least significant bit.
Repetition r of an algorithm runs with seed master_seed XOR r.
Histogram CSVs are bitstring,count; trace CSVs are
iteration,cost,best_cost,eval_count.
";

/// The experiment engine behind `run` and `sweep`.
pub fn run_experiment(
    config: &ExperimentConfig,
    instance: &GapInstance,
    out_dir: &Path,
    jobs: usize,
) -> Result<RunSummary, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::runtime(e.to_string()))?;

    let units: Vec<(usize, u64)> = (0..config.algorithms.len())
        .flat_map(|a| (0..config.repetitions).map(move |r| (a, r)))
        .collect();
    let results: Vec<(usize, u64, Result<RunResult, String>)> = pool.install(|| {
        units
            .par_iter()
            .map(|&(a, r)| {
                let run_config = config.run_config(&config.algorithms[a], r);
                let outcome =
                    driver::run_algorithm(&run_config, instance).map_err(|e| e.to_string());
                (a, r, outcome)
            })
            .collect()
    });

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut comparison = String::from(MetricsReport::csv_header());
    comparison.push('\n');
    for (index, selection) in config.algorithms.iter().enumerate() {
        let label = selection.label();
        let dir = out_dir.join(&label);
        std::fs::create_dir_all(&dir)?;
        let mut successes = Vec::new();
        for (a, r, outcome) in &results {
            if *a != index {
                continue;
            }
            match outcome {
                Ok(run) => {
                    write_run_result(&dir, *r, run)?;
                    successes.push(run.clone());
                }
                Err(message) => failures.push((label.clone(), *r, message.clone())),
            }
        }
        if successes.is_empty() {
            continue;
        }
        let report = metrics::aggregate(&successes, instance)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        let mut csv = String::from(MetricsReport::csv_header());
        csv.push('\n');
        csv.push_str(&report.to_csv_row());
        csv.push('\n');
        write_atomic(&out_dir.join(format!("report_{label}.csv")), csv.as_bytes())?;
        comparison.push_str(&report.to_csv_row());
        comparison.push('\n');
        reports.push(report);
    }
    write_atomic(&out_dir.join("comparison.csv"), comparison.as_bytes())?;
    if !failures.is_empty() {
        write_json(&out_dir.join("failures.json"), &failures)?;
    }

    // a fully failed algorithm is an error, not a silent omission
    let fully_failed: Vec<String> = config
        .algorithms
        .iter()
        .map(AlgorithmSelection::label)
        .filter(|label| !reports.iter().any(|r| report_label(r) == *label))
        .collect();
    if !fully_failed.is_empty() {
        return Err(CliError::runtime(format!(
            "algorithms produced no successful repetitions: {}; see {}",
            fully_failed.join(", "),
            out_dir.join("failures.json").display()
        )));
    }
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        reports,
        failures,
    })
}

fn report_label(report: &MetricsReport) -> String {
    let base = report.ansatz.to_lowercase();
    match report.esu2_reps {
        Some(rep) => format!("{base}_rep{rep}"),
        None => base,
    }
}

/// The parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NoiseP2,
    Shots,
    Rep,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noise_p2" => Ok(SweepParam::NoiseP2),
            "shots" => Ok(SweepParam::Shots),
            "rep" => Ok(SweepParam::Rep),
            other => Err(format!(
                "unknown sweep parameter {other:?}; expected noise_p2, shots, or rep"
            )),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParam::NoiseP2 => "noise_p2",
            SweepParam::Shots => "shots",
            SweepParam::Rep => "rep",
        })
    }
}

fn apply_sweep_value(
    config: &ExperimentConfig,
    param: SweepParam,
    raw: &str,
) -> Result<ExperimentConfig, CliError> {
    let mut varied = config.clone();
    match param {
        SweepParam::NoiseP2 => {
            let p2: f64 = raw
                .parse()
                .map_err(|_| CliError::usage(format!("noise_p2 value {raw:?} is not a number")))?;
            if !(0.0..=1.0).contains(&p2) {
                return Err(CliError::usage(format!("noise_p2 {p2} outside [0, 1]")));
            }
            match &mut varied.noise {
                Some(noise) => noise.p2 = p2,
                None => {
                    varied.noise = Some(vqgap_core::driver::NoiseSettings {
                        p1: 0.0,
                        p2,
                        trajectories: 16,
                    })
                }
            }
        }
        SweepParam::Shots => {
            let shots: u64 = raw
                .parse()
                .map_err(|_| CliError::usage(format!("shots value {raw:?} is not an integer")))?;
            if shots == 0 {
                return Err(CliError::usage("shots must be >= 1"));
            }
            varied.shots = shots;
        }
        SweepParam::Rep => {
            let rep: usize = raw
                .parse()
                .map_err(|_| CliError::usage(format!("rep value {raw:?} is not an integer")))?;
            if rep == 0 {
                return Err(CliError::usage("rep must be >= 1"));
            }
            for selection in &mut varied.algorithms {
                selection.rep = rep;
            }
        }
    }
    varied.validate()?;
    Ok(varied)
}

/// Runs the experiment once per swept value and emits a long-format CSV
/// keyed by the value.
pub fn cmd_sweep(
    config_path: &Path,
    param: SweepParam,
    values: &[String],
    out_override: Option<&Path>,
    jobs: usize,
) -> Result<PathBuf, CliError> {
    if values.is_empty() {
        return Err(CliError::usage("sweep needs at least one value"));
    }
    let config = ExperimentConfig::load(config_path)?;
    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| {
            CliError::usage("no output directory: set output_dir in the config or pass --out")
        })?;
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    let instance = config.resolve_instance(base_dir)?;
    std::fs::create_dir_all(&out_dir)?;
    let original = std::fs::read(config_path)?;
    write_atomic(&out_dir.join("config.json"), &original)?;
    write_json(&out_dir.join("instance.json"), &instance)?;
    write_atomic(&out_dir.join("conventions.txt"), CONVENTIONS.as_bytes())?;

    let mut sweep_csv = format!("param,value,{}\n", MetricsReport::csv_header());
    for raw in values {
        let varied = apply_sweep_value(&config, param, raw)?;
        let value_dir = out_dir.join(format!("{param}_{raw}"));
        std::fs::create_dir_all(&value_dir)?;
        write_json(&value_dir.join("config.json"), &varied)?;
        write_json(&value_dir.join("instance.json"), &instance)?;
        let summary = run_experiment(&varied, &instance, &value_dir, jobs)?;
        for report in &summary.reports {
            sweep_csv.push_str(&format!("{param},{raw},{}\n", report.to_csv_row()));
        }
    }
    let sweep_path = out_dir.join("sweep.csv");
    write_atomic(&sweep_path, sweep_csv.as_bytes())?;
    Ok(sweep_path)
}

/// Re-aggregates reports from the run artifacts already on disk.
pub fn cmd_report(dir: &Path) -> Result<RunSummary, CliError> {
    let config_path = dir.join("config.json");
    let config = ExperimentConfig::load(&config_path)?;
    let instance_text = std::fs::read_to_string(dir.join("instance.json"))
        .map_err(|e| CliError::usage(format!("cannot read instance.json: {e}")))?;
    let instance: GapInstance = serde_json::from_str(&instance_text)
        .map_err(|e| CliError::usage(format!("invalid instance.json: {e}")))?;

    let mut reports = Vec::new();
    let mut comparison = String::from(MetricsReport::csv_header());
    comparison.push('\n');
    for selection in &config.algorithms {
        let label = selection.label();
        let run_dir = dir.join(&label);
        let mut runs = Vec::new();
        if run_dir.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&run_dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| {
                    p.extension().is_some_and(|x| x == "json")
                        && p.file_stem()
                            .and_then(|s| s.to_str())
                            .is_some_and(|s| s.starts_with("rep_"))
                })
                .collect();
            entries.sort();
            for path in entries {
                let text = std::fs::read_to_string(&path)?;
                let run: RunResult = serde_json::from_str(&text).map_err(|e| {
                    CliError::runtime(format!("invalid run result {}: {e}", path.display()))
                })?;
                runs.push(run);
            }
        }
        if runs.is_empty() {
            continue;
        }
        let report =
            metrics::aggregate(&runs, &instance).map_err(|e| CliError::runtime(e.to_string()))?;
        let mut csv = String::from(MetricsReport::csv_header());
        csv.push('\n');
        csv.push_str(&report.to_csv_row());
        csv.push('\n');
        write_atomic(&dir.join(format!("report_{label}.csv")), csv.as_bytes())?;
        comparison.push_str(&report.to_csv_row());
        comparison.push('\n');
        reports.push(report);
    }
    if reports.is_empty() {
        return Err(CliError::usage(format!(
            "no run results found under {}",
            dir.display()
        )));
    }
    write_atomic(&dir.join("comparison.csv"), comparison.as_bytes())?;
    Ok(RunSummary {
        out_dir: dir.to_path_buf(),
        reports,
        failures: Vec::new(),
    })
}

/// Resolves an instance source outside of a full experiment config
/// (used by `solve` on generated specs in tests).
pub fn load_instance(source: &InstanceSource, base_dir: &Path) -> Result<GapInstance, CliError> {
    let config = ExperimentConfig {
        instance: source.clone(),
        algorithms: vec![],
        shots: 1,
        repetitions: 1,
        optimizer: Default::default(),
        noise: None,
        master_seed: 0,
        init: vqgap_core::driver::InitKind::Zeros,
        output_dir: None,
    };
    config.resolve_instance(base_dir)
}
