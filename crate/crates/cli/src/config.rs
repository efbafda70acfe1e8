//! Experiment configuration files.
//!
//! A single JSON document drives a whole experiment; environment
//! variables are never consulted, so `(config, master seed)` fully
//! determines every output byte. Repetition `r` of an algorithm runs
//! with seed `master_seed XOR r`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vqgap_core::driver::{Algorithm, AlgorithmConfig, InitKind, NoiseSettings, OptimizerSettings};
use vqgap_core::gap::GapInstance;
use vqgap_core::AnsatzKind;

use crate::CliError;

/// Where the instance comes from: an existing file or a generation
/// recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Path(PathBuf),
    Generate(GenerateSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateSpec {
    pub tasks: usize,
    pub agents: usize,
    pub max_budget: i64,
    pub max_profit: i64,
    pub seed: u64,
}

impl GenerateSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.tasks < 1 || self.agents < 1 {
            return Err("tasks and agents must be >= 1".into());
        }
        if self.max_budget < 1 || self.max_profit < 1 {
            return Err("max_budget and max_profit must be >= 1".into());
        }
        Ok(())
    }

    pub fn build(&self) -> GapInstance {
        GapInstance::generate(
            self.tasks,
            self.agents,
            self.max_budget,
            self.max_profit,
            self.seed,
        )
    }
}

/// One algorithm/ansatz pairing to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmSelection {
    pub algorithm: Algorithm,
    pub ansatz: AnsatzKind,
    #[serde(default = "default_rep")]
    pub rep: usize,
}

fn default_rep() -> usize {
    1
}

impl AlgorithmSelection {
    /// Directory / file label; the ansatz name already identifies the
    /// algorithm, e.g. `vqgape_esu2_rep2`.
    pub fn label(&self) -> String {
        let base = self.ansatz.to_string().to_lowercase();
        if self.ansatz == AnsatzKind::VqgapeEsu2 {
            format!("{base}_rep{}", self.rep)
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub algorithms: Vec<AlgorithmSelection>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: u64,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub noise: Option<NoiseSettings>,
    pub master_seed: u64,
    #[serde(default = "default_init")]
    pub init: InitKind,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_shots() -> u64 {
    4096
}

fn default_repetitions() -> u64 {
    100
}

fn default_init() -> InitKind {
    InitKind::UniformRandom
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.repetitions < 1 {
            return Err(CliError::usage("repetitions must be >= 1"));
        }
        if self.shots < 1 {
            return Err(CliError::usage("shots must be >= 1"));
        }
        if self.algorithms.is_empty() {
            return Err(CliError::usage("at least one algorithm entry is required"));
        }
        if let InstanceSource::Generate(spec) = &self.instance {
            spec.validate().map_err(CliError::usage)?;
        }
        for selection in &self.algorithms {
            self.run_config(selection, 0)
                .validate()
                .map_err(|e| CliError::usage(format!("algorithm {}: {e}", selection.label())))?;
        }
        Ok(())
    }

    /// Resolves the instance, reading or generating as configured.
    pub fn resolve_instance(&self, base_dir: &Path) -> Result<GapInstance, CliError> {
        let instance = match &self.instance {
            InstanceSource::Path(path) => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    CliError::usage(format!("cannot read instance {}: {e}", full.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::usage(format!("invalid instance {}: {e}", full.display()))
                })?
            }
            InstanceSource::Generate(spec) => spec.build(),
        };
        validate_instance(&instance)?;
        Ok(instance)
    }

    /// The per-repetition driver configuration; repetition `r` uses seed
    /// `master_seed XOR r`.
    pub fn run_config(&self, selection: &AlgorithmSelection, repetition: u64) -> AlgorithmConfig {
        AlgorithmConfig {
            algorithm: selection.algorithm,
            ansatz: selection.ansatz,
            esu2_reps: selection.rep,
            shots: self.shots,
            optimizer: self.optimizer,
            noise: self.noise,
            seed: self.master_seed ^ repetition,
            init: self.init,
        }
    }
}

pub fn validate_instance(instance: &GapInstance) -> Result<(), CliError> {
    instance.validate().map_err(|issues| {
        let rendered: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        CliError::usage(format!("invalid instance: {}", rendered.join("; ")))
    })
}
