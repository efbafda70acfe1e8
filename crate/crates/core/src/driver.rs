//! The hybrid quantum-classical loop: layout + ansatz construction,
//! shot-based cost estimation, classical minimization, and final
//! sampling.
//!
//! Seed discipline: all randomness of one run derives from
//! `config.seed`. Objective evaluation `k` samples from stream
//! `(OBJECTIVE_SAMPLE, k, t)` (trajectory `t`; `t = 0` is the noiseless
//! stream), noise insertion from `(NOISE_TRAJECTORY, k, t)`, and the
//! final histogram from dedicated `FINAL_SAMPLE` streams. Runs are
//! therefore bit-reproducible and independent runs can execute
//! concurrently.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{self, AnsatzDescriptor, AnsatzError, AnsatzKind};
use crate::bits::BitString;
use crate::circuit::Circuit;
use crate::gap::{GapError, GapInstance};
use crate::layout::{LayoutError, LayoutKind, VariableLayout};
use crate::optimizer::{
    initial_parameters, minimize, InitStrategy, Method, MinimizeOptions, OptimizerError,
    OptimizerTrace,
};
use crate::qubo::{build_qubo, to_ising, IsingModel, QuboError};
use crate::rng::{purpose, seeded_rng, stream_id};
use crate::sim::{self, Histogram, NoiseConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "VQE")]
    Vqe,
    #[serde(rename = "VQGAP")]
    Vqgap,
    #[serde(rename = "VQGAPE")]
    Vqgape,
}

impl Algorithm {
    pub fn layout_kind(&self) -> LayoutKind {
        match self {
            Algorithm::Vqe => LayoutKind::VqeFull,
            Algorithm::Vqgap => LayoutKind::Vqgap,
            Algorithm::Vqgape => LayoutKind::Vqgape,
        }
    }

    /// The ansatz families each algorithm may drive.
    pub fn allows(&self, ansatz: AnsatzKind) -> bool {
        matches!(
            (self, ansatz),
            (Algorithm::Vqe, AnsatzKind::VqeRef)
                | (Algorithm::Vqgap, AnsatzKind::VqgapRef)
                | (Algorithm::Vqgape, AnsatzKind::VqgapeRxl)
                | (Algorithm::Vqgape, AnsatzKind::VqgapeEsu2)
        )
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Algorithm::Vqe => "VQE",
            Algorithm::Vqgap => "VQGAP",
            Algorithm::Vqgape => "VQGAPE",
        };
        f.write_str(name)
    }
}

/// Noise settings of one run; the trajectory seed is derived from the
/// run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSettings {
    pub p1: f64,
    pub p2: f64,
    #[serde(default = "default_trajectories")]
    pub trajectories: u64,
}

fn default_trajectories() -> u64 {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub method: Method,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Independent optimizer starts sharing the iteration budget.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_max_iterations() -> usize {
    300
}

fn default_tolerance() -> f64 {
    1e-3
}

fn default_restarts() -> usize {
    1
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            method: Method::NelderMead,
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            restarts: default_restarts(),
        }
    }
}

/// Initialization choice at the configuration level; the concrete seed
/// comes from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitKind {
    #[serde(rename = "ZEROS")]
    Zeros,
    #[serde(rename = "UNIFORM_RANDOM")]
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    pub ansatz: AnsatzKind,
    #[serde(default = "default_esu2_reps")]
    pub esu2_reps: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub noise: Option<NoiseSettings>,
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitKind,
}

fn default_esu2_reps() -> usize {
    1
}

fn default_shots() -> u64 {
    4096
}

fn default_init() -> InitKind {
    InitKind::UniformRandom
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        if self.shots == 0 {
            return Err(DriverError::BadConfig("shots must be >= 1".into()));
        }
        if !self.algorithm.allows(self.ansatz) {
            return Err(DriverError::IllegalPairing {
                algorithm: self.algorithm,
                ansatz: self.ansatz,
            });
        }
        if self.ansatz == AnsatzKind::VqgapeEsu2 && self.esu2_reps == 0 {
            return Err(DriverError::BadConfig("esu2 reps must be >= 1".into()));
        }
        if let Some(noise) = &self.noise {
            if noise.trajectories == 0 {
                return Err(DriverError::BadConfig("trajectories must be >= 1".into()));
            }
            NoiseConfig {
                one_qubit_depolarizing_prob: noise.p1,
                two_qubit_depolarizing_prob: noise.p2,
                trajectory_seed: 0,
            }
            .validate()?;
        }
        Ok(())
    }

    fn effective_noise(&self) -> Option<NoiseSettings> {
        self.noise.filter(|n| n.p1 > 0.0 || n.p2 > 0.0)
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("algorithm {algorithm} cannot drive ansatz {ansatz}")]
    IllegalPairing {
        algorithm: Algorithm,
        ansatz: AnsatzKind,
    },
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("non-finite cost for bitstring {bitstring}")]
    NonFiniteCost { bitstring: String },
    #[error(transparent)]
    Gap(#[from] GapError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

/// Decodes bitstrings to costs for one algorithm over one instance,
/// memoizing decoded values across optimizer iterations.
pub struct CostEvaluator {
    algorithm: Algorithm,
    layout: VariableLayout,
    ising: Option<IsingModel>,
    cache: RefCell<HashMap<u64, f64>>,
}

impl CostEvaluator {
    pub fn new(algorithm: Algorithm, instance: &GapInstance) -> Result<Self, DriverError> {
        let layout = VariableLayout::new(instance, algorithm.layout_kind());
        let ising = match algorithm {
            Algorithm::Vqe => Some(to_ising(&build_qubo(instance, &layout)?)),
            _ => None,
        };
        Ok(Self {
            algorithm,
            layout,
            ising,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn ising(&self) -> Option<&IsingModel> {
        self.ising.as_ref()
    }

    /// Cost of one measured bitstring: Ising evaluation for VQE,
    /// penalty objective over the decoded variables otherwise.
    pub fn cost_of_bitstring(&self, bits: BitString) -> Result<f64, DriverError> {
        if let Some(&cached) = self.cache.borrow().get(&bits.index()) {
            return Ok(cached);
        }
        let cost = match self.algorithm {
            Algorithm::Vqe => self.ising.as_ref().unwrap().evaluate(bits)?,
            Algorithm::Vqgap => {
                let d = self.layout.decode_vqgap(bits)?;
                self.layout
                    .instance()
                    .extended_objective(&d.x, &d.s, &d.residuals)? as f64
            }
            Algorithm::Vqgape => {
                let d = self.layout.decode_vqgape(bits)?;
                self.layout
                    .instance()
                    .extended_objective(&d.x, &d.s, &d.residuals)? as f64
            }
        };
        if !cost.is_finite() {
            return Err(DriverError::NonFiniteCost {
                bitstring: bits.to_string(),
            });
        }
        self.cache.borrow_mut().insert(bits.index(), cost);
        Ok(cost)
    }

    /// Shot-weighted mean cost of a histogram.
    pub fn mean_cost(&self, histogram: &Histogram) -> Result<f64, DriverError> {
        let shots = histogram.total_shots() as f64;
        let mut total = 0.0;
        for (bits, count) in histogram.iter() {
            total += count as f64 * self.cost_of_bitstring(bits)?;
        }
        Ok(total / shots)
    }
}

/// Everything recorded about one hybrid run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: AlgorithmConfig,
    pub descriptor: AnsatzDescriptor,
    pub qubit_count: usize,
    /// Parameters returned by the optimizer (best estimate found).
    pub final_params: Vec<f64>,
    /// Fresh sample at the final parameters, on dedicated seed streams.
    pub final_histogram: Histogram,
    /// Decoded cost of every bitstring in the final histogram.
    pub bitstring_costs: BTreeMap<BitString, f64>,
    /// Minimum decoded cost over the final histogram support.
    pub best_cost: f64,
    pub best_bitstring: BitString,
    /// Shot-weighted mean cost of the final histogram.
    pub expected_cost: f64,
    /// Objective estimate at the starting parameters.
    pub initial_cost: f64,
    pub evaluations: usize,
    pub trace: OptimizerTrace,
}

/// One configured hybrid run over one instance.
pub struct HybridRun<'a> {
    config: &'a AlgorithmConfig,
    circuit: Circuit,
    descriptor: AnsatzDescriptor,
    evaluator: CostEvaluator,
    eval_counter: Cell<u64>,
}

impl<'a> HybridRun<'a> {
    pub fn new(config: &'a AlgorithmConfig, instance: &GapInstance) -> Result<Self, DriverError> {
        config.validate()?;
        instance.validate().map_err(GapError::Invalid)?;
        let evaluator = CostEvaluator::new(config.algorithm, instance)?;
        let (circuit, descriptor) =
            ansatz::build(config.ansatz, evaluator.layout(), config.esu2_reps)?;
        Ok(Self {
            config,
            circuit,
            descriptor,
            evaluator,
            eval_counter: Cell::new(0),
        })
    }

    pub fn descriptor(&self) -> &AnsatzDescriptor {
        &self.descriptor
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn evaluator(&self) -> &CostEvaluator {
        &self.evaluator
    }

    /// Samples a histogram at `params`. Stream index `k` is the
    /// evaluation counter for objective estimates; final sampling uses
    /// the dedicated purpose tag.
    fn sample_histogram(
        &self,
        params: &[f64],
        tag: u64,
        index: u64,
    ) -> Result<Histogram, DriverError> {
        let seed = self.config.seed;
        match self.config.effective_noise() {
            None => {
                let state = sim::run(&self.circuit, params)?;
                let mut rng = seeded_rng(seed, stream_id(tag, index, 0));
                Ok(state.sample_with_rng(self.config.shots, &mut rng))
            }
            Some(noise) => {
                let noise_config = NoiseConfig {
                    one_qubit_depolarizing_prob: noise.p1,
                    two_qubit_depolarizing_prob: noise.p2,
                    trajectory_seed: seed,
                };
                let trajectories = noise.trajectories.min(self.config.shots);
                let base = self.config.shots / trajectories;
                let remainder = self.config.shots % trajectories;
                let mut histogram = Histogram::new(self.circuit.num_qubits());
                for t in 0..trajectories {
                    let mut noise_rng = seeded_rng(
                        seed,
                        stream_id(purpose::NOISE_TRAJECTORY, index ^ (tag << 32), t),
                    );
                    let state = sim::run_with_trajectory_noise(
                        &self.circuit,
                        params,
                        &noise_config,
                        &mut noise_rng,
                    )?;
                    let shots = base + u64::from(t < remainder);
                    if shots == 0 {
                        continue;
                    }
                    let mut shot_rng = seeded_rng(seed, stream_id(tag, index, t + 1));
                    histogram.merge(&state.sample_with_rng(shots, &mut shot_rng));
                }
                Ok(histogram)
            }
        }
    }

    /// One shot-based objective estimate; advances the evaluation
    /// counter that keys the sampling streams.
    pub fn estimate_cost(&self, params: &[f64]) -> Result<f64, DriverError> {
        let index = self.eval_counter.get();
        self.eval_counter.set(index + 1);
        let histogram = self.sample_histogram(params, purpose::OBJECTIVE_SAMPLE, index)?;
        self.evaluator.mean_cost(&histogram)
    }

    /// Runs the full hybrid loop.
    pub fn execute(self) -> Result<RunResult, DriverError> {
        let theta0 = initial_parameters(
            self.descriptor.parameter_count.max(1),
            &match self.config.init {
                InitKind::Zeros => InitStrategy::Zeros,
                InitKind::UniformRandom => InitStrategy::UniformRandom {
                    seed: self.config.seed,
                },
            },
        );
        let error_slot: RefCell<Option<DriverError>> = RefCell::new(None);
        let objective = |params: &[f64]| -> f64 {
            match self.estimate_cost(params) {
                Ok(value) => value,
                Err(error) => {
                    error_slot.borrow_mut().get_or_insert(error);
                    f64::NAN
                }
            }
        };
        let options = MinimizeOptions {
            method: self.config.optimizer.method,
            max_iterations: self.config.optimizer.max_iterations,
            tolerance: self.config.optimizer.tolerance,
            seed: self.config.seed,
            restarts: self.config.optimizer.restarts.max(1),
        };
        let outcome = minimize(objective, &theta0, &options);
        if let Some(error) = error_slot.into_inner() {
            return Err(error);
        }
        let optimum = outcome?;

        let final_histogram =
            self.sample_histogram(&optimum.best_params, purpose::FINAL_SAMPLE, 0)?;
        let mut bitstring_costs = BTreeMap::new();
        let mut best_cost = f64::INFINITY;
        let mut best_bitstring = BitString::new(0, self.circuit.num_qubits());
        let mut expected_cost = 0.0;
        let shots = final_histogram.total_shots() as f64;
        for (bits, count) in final_histogram.iter() {
            let cost = self.evaluator.cost_of_bitstring(bits)?;
            expected_cost += count as f64 * cost;
            if cost < best_cost {
                best_cost = cost;
                best_bitstring = bits;
            }
            bitstring_costs.insert(bits, cost);
        }
        expected_cost /= shots;

        Ok(RunResult {
            config: self.config.clone(),
            descriptor: self.descriptor,
            qubit_count: self.circuit.num_qubits(),
            final_params: optimum.best_params,
            final_histogram,
            bitstring_costs,
            best_cost,
            best_bitstring,
            expected_cost,
            initial_cost: optimum.initial_cost,
            evaluations: optimum.evaluations,
            trace: optimum.trace,
        })
    }
}

/// Builds and executes one run.
pub fn run_algorithm(
    config: &AlgorithmConfig,
    instance: &GapInstance,
) -> Result<RunResult, DriverError> {
    HybridRun::new(config, instance)?.execute()
}
