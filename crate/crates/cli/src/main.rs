//! `vqgap`: a workbench for comparing hybrid variational quantum
//! algorithms on the generalized assignment problem.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use vqgap_cli::commands::{self, SweepParam};
use vqgap_cli::config::GenerateSpec;
use vqgap_cli::CliError;

#[derive(Parser)]
#[command(
    name = "vqgap",
    about = "Variational quantum algorithms for the generalized assignment problem",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WorkerArgs {
    /// Worker threads for repetitions (0 = available parallelism).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory (overrides the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Generate {
        #[arg(long)]
        tasks: usize,
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        max_budget: i64,
        #[arg(long, default_value_t = 9)]
        max_profit: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination file.
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Solve an instance exactly by enumeration.
    Solve {
        /// Instance JSON file.
        instance: PathBuf,
    },
    /// Run an experiment configuration.
    Run {
        /// Experiment config JSON file.
        config: PathBuf,
        #[command(flatten)]
        workers: WorkerArgs,
    },
    /// Run the experiment once per value of a swept parameter.
    Sweep {
        /// Experiment config JSON file.
        config: PathBuf,
        /// Parameter to vary: noise_p2, shots, or rep.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[command(flatten)]
        workers: WorkerArgs,
    },
    /// Re-aggregate reports from existing run artifacts.
    Report {
        /// Output directory of a previous run.
        dir: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            tasks,
            agents,
            max_budget,
            max_profit,
            seed,
            out,
            force,
        } => {
            let spec = GenerateSpec {
                tasks,
                agents,
                max_budget,
                max_profit,
                seed,
            };
            let message = commands::cmd_generate(&spec, &out, force)?;
            println!("{message}");
            Ok(())
        }
        Command::Solve { instance } => {
            let text = commands::cmd_solve(&instance)?;
            println!("{text}");
            Ok(())
        }
        Command::Run { config, workers } => {
            let summary = commands::cmd_run(&config, workers.out.as_deref(), workers.jobs)?;
            for report in &summary.reports {
                println!(
                    "{} ({} runs): P_feas {:.4} +- {:.4}, best error {:.2}",
                    report.ansatz,
                    report.runs,
                    report.p_feas.mean,
                    report.p_feas.std,
                    report.best_error.mean,
                );
            }
            for (label, repetition, error) in &summary.failures {
                eprintln!("warning: {label} repetition {repetition} failed: {error}");
            }
            println!("results in {}", summary.out_dir.display());
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            values,
            workers,
        } => {
            let param: SweepParam = param.parse().map_err(CliError::usage)?;
            let path = commands::cmd_sweep(
                &config,
                param,
                &values,
                workers.out.as_deref(),
                workers.jobs,
            )?;
            println!("sweep table in {}", path.display());
            Ok(())
        }
        Command::Report { dir } => {
            let summary = commands::cmd_report(&dir)?;
            println!(
                "re-aggregated {} report(s) in {}",
                summary.reports.len(),
                summary.out_dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            // --help / --version are successful exits; everything else
            // is a usage error
            let code = match error.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = error.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
