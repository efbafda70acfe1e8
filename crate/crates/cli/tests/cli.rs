//! End-to-end tests of the `vqgap` binary and command library.

use std::path::Path;
use std::process::{Command, Output};

use vqgap_cli::commands;
use vqgap_cli::config::GenerateSpec;
use vqgap_core::gap::GapInstance;
use vqgap_core::layout::{LayoutKind, VariableLayout};

fn vqgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqgap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

const SMOKE_CONFIG: &str = r#"{
    "instance": {"tasks": 2, "agents": 2, "max_budget": 3, "max_profit": 5, "seed": 4},
    "algorithms": [{"algorithm": "VQGAPE", "ansatz": "VQGAPE_RXL"}],
    "shots": 256,
    "repetitions": 1,
    "optimizer": {"method": "NELDER_MEAD", "max_iterations": 15, "tolerance": 0.001},
    "master_seed": 11
}"#;

#[test]
fn generate_writes_a_valid_instance_with_the_reference_qubit_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("instance.json");
    let output = vqgap(&[
        "generate",
        "--tasks",
        "4",
        "--agents",
        "3",
        "--max-budget",
        "3",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let instance: GapInstance =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(instance.validate().is_ok());
    let q = VariableLayout::new(&instance, LayoutKind::VqeFull).qubit_count();
    assert_eq!(q, 22);
}

#[test]
fn generate_is_byte_deterministic_and_guards_overwrites() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let spec = GenerateSpec {
            tasks: 3,
            agents: 2,
            max_budget: 3,
            max_profit: 9,
            seed: 5,
        };
        commands::cmd_generate(&spec, out, false).unwrap();
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // refuses to overwrite without force
    let spec = GenerateSpec {
        tasks: 3,
        agents: 2,
        max_budget: 3,
        max_profit: 9,
        seed: 6,
    };
    assert!(commands::cmd_generate(&spec, &a, false).is_err());
    commands::cmd_generate(&spec, &a, true).unwrap();
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn generate_rejects_zero_tasks_with_usage_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let output = vqgap(&[
        "generate",
        "--tasks",
        "0",
        "--agents",
        "2",
        "--max-budget",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn solve_prints_the_optimum_of_a_trivial_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.json");
    std::fs::write(
        &path,
        r#"{"tasks":1,"agents":1,"profits":[[3]],"weights":[[1]],"budgets":[1]}"#,
    )
    .unwrap();
    let output = vqgap(&["solve", path.to_str().unwrap()]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("optimal cost: -3"));
    assert!(stdout.contains("task 0 -> agent 0"));
    assert!(stdout.contains("VQE_FULL"));
}

#[test]
fn solve_reports_missing_files_with_nonzero_exit() {
    let output = vqgap(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(!output.stderr.is_empty());
}

#[test]
fn solve_handles_the_larger_reference_size() {
    // (A+1)^T = 4^5 = 1024 patterns
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t5a3.json");
    let instance = GapInstance::generate(5, 3, 3, 9, 3);
    std::fs::write(&path, serde_json::to_string(&instance).unwrap()).unwrap();
    let output = vqgap(&["solve", path.to_str().unwrap()]);
    assert!(output.status.success());
}

#[test]
fn run_produces_result_files_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMOKE_CONFIG);
    let out = dir.path().join("results");
    let output = vqgap(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(output.status.success(), "{output:?}");
    assert!(out.join("config.json").exists());
    assert!(out.join("instance.json").exists());
    assert!(out.join("vqgape_rxl/rep_0000.json").exists());
    assert!(out.join("vqgape_rxl/rep_0000_trace.csv").exists());
    assert!(out.join("vqgape_rxl/rep_0000_hist.csv").exists());
    assert!(out.join("report_vqgape_rxl.csv").exists());
    assert!(out.join("comparison.csv").exists());
    // the config travels verbatim
    assert_eq!(
        std::fs::read(out.join("config.json")).unwrap(),
        std::fs::read(&config).unwrap()
    );
}

#[test]
fn rerun_with_the_same_master_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMOKE_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = vqgap(&[
            "run",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    for file in [
        "comparison.csv",
        "report_vqgape_rxl.csv",
        "vqgape_rxl/rep_0000.json",
        "vqgape_rxl/rep_0000_trace.csv",
        "vqgape_rxl/rep_0000_hist.csv",
    ] {
        assert_eq!(
            std::fs::read(out_a.join(file)).unwrap(),
            std::fs::read(out_b.join(file)).unwrap(),
            "{file} differs between reruns"
        );
    }
}

#[test]
fn report_reaggregates_to_the_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMOKE_CONFIG);
    let out = dir.path().join("results");
    assert!(vqgap(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let before = std::fs::read(out.join("comparison.csv")).unwrap();
    assert!(vqgap(&["report", out.to_str().unwrap()]).status.success());
    let after = std::fs::read(out.join("comparison.csv")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn sweep_emits_a_long_format_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMOKE_CONFIG);
    let out = dir.path().join("sweep");
    let output = vqgap(&[
        "sweep",
        config.to_str().unwrap(),
        "--param",
        "shots",
        "--values",
        "128,256",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("param,value,algorithm"));
    assert_eq!(lines.len(), 3); // header + one row per value
    assert!(lines[1].starts_with("shots,128,"));
    assert!(lines[2].starts_with("shots,256,"));
}

#[test]
fn single_value_sweep_matches_run_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMOKE_CONFIG);
    let run_out = dir.path().join("run");
    let sweep_out = dir.path().join("sweep");
    assert!(vqgap(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        run_out.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(vqgap(&[
        "sweep",
        config.to_str().unwrap(),
        "--param",
        "shots",
        "--values",
        "256",
        "--out",
        sweep_out.to_str().unwrap(),
    ])
    .status
    .success());
    // the swept value equals the config's shots, so the nested run
    // reproduces cmd_run's outputs exactly
    assert_eq!(
        std::fs::read(run_out.join("comparison.csv")).unwrap(),
        std::fs::read(sweep_out.join("shots_256/comparison.csv")).unwrap()
    );
    // and the sweep row is the comparison row keyed by the value
    let comparison = std::fs::read_to_string(run_out.join("comparison.csv")).unwrap();
    let sweep = std::fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    let row = comparison.lines().nth(1).unwrap();
    assert!(sweep.lines().nth(1).unwrap().ends_with(row));
}

#[test]
fn sweep_over_noise_probability_fills_the_key_column() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
            "instance": {"tasks": 2, "agents": 2, "max_budget": 3, "max_profit": 5, "seed": 4},
            "algorithms": [{"algorithm": "VQGAP", "ansatz": "VQGAP_REF"}],
            "shots": 256,
            "repetitions": 1,
            "optimizer": {"method": "NELDER_MEAD", "max_iterations": 10, "tolerance": 0.001},
            "master_seed": 11
        }"#,
    );
    let out = dir.path().join("noise");
    let output = vqgap(&[
        "sweep",
        config.to_str().unwrap(),
        "--param",
        "noise_p2",
        "--values",
        "0,0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("noise_p2,0,"));
    assert!(lines[2].starts_with("noise_p2,0.05,"));
    // the noise_p2 report column (6th) reflects the swept value
    let p2_column: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(7).unwrap()).collect();
    assert_eq!(p2_column, vec!["0", "0.05"]);
    // out-of-range probabilities are usage errors
    let bad = vqgap(&[
        "sweep",
        config.to_str().unwrap(),
        "--param",
        "noise_p2",
        "--values",
        "1.5",
        "--out",
        dir.path().join("bad").to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn sweep_rejects_an_empty_value_list() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMOKE_CONFIG);
    let output = vqgap(&[
        "sweep",
        config.to_str().unwrap(),
        "--param",
        "shots",
        "--values",
        "",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn run_compares_vqgap_and_vqgape_on_the_reference_size() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
            "instance": {"tasks": 4, "agents": 3, "max_budget": 3, "max_profit": 9, "seed": 45},
            "algorithms": [
                {"algorithm": "VQGAP", "ansatz": "VQGAP_REF"},
                {"algorithm": "VQGAPE", "ansatz": "VQGAPE_RXL"}
            ],
            "shots": 1024,
            "repetitions": 2,
            "optimizer": {"method": "NELDER_MEAD", "max_iterations": 40, "tolerance": 0.001},
            "master_seed": 9
        }"#,
    );
    let out = dir.path().join("results");
    let output = vqgap(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let comparison = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = comparison.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("VQGAP,VQGAP_REF"));
    assert!(lines[2].starts_with("VQGAPE,VQGAPE_RXL"));
}

#[test]
fn shipped_configs_parse_and_validate() {
    let configs = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            vqgap_cli::config::ExperimentConfig::load(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}

#[test]
fn run_rejects_a_broken_config_with_usage_exit() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"instance": 42}"#);
    let output = vqgap(&["run", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}
