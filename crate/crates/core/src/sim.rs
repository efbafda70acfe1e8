//! Dense statevector simulation, shot sampling, and stochastic
//! Pauli-trajectory noise.
//!
//! Amplitude storage is little-endian in qubit index: qubit 0 is the
//! least significant bit of the amplitude array index. The engine is
//! exact up to floating point; `2^Q` amplitudes bound the register to
//! [`MAX_QUBITS`] qubits (1 GiB of amplitudes at the limit).

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;
use crate::circuit::{Circuit, Gate};
use crate::rng::{purpose, seeded_rng, stream_id};

pub const MAX_QUBITS: usize = 26;

/// Probabilities below this threshold are dropped from exact
/// distributions.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("parameter vector has {got} entries, circuit expects {expected}")]
    ParameterCountMismatch { got: usize, expected: usize },
    #[error("{0} qubits exceed the simulator budget of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("depolarizing probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("shots must be >= 1")]
    NoShots,
}

/// Gate-level depolarizing noise realized as stochastic Pauli insertion.
///
/// After each gate of a trajectory, with probability `p1` (single-qubit
/// gates) or `p2` (gates on two or more qubits) a uniformly random
/// non-identity Pauli string is applied to the gate's operand qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    #[serde(rename = "p1")]
    pub one_qubit_depolarizing_prob: f64,
    #[serde(rename = "p2")]
    pub two_qubit_depolarizing_prob: f64,
    #[serde(default)]
    pub trajectory_seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        for p in [
            self.one_qubit_depolarizing_prob,
            self.two_qubit_depolarizing_prob,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::ProbabilityOutOfRange(p));
            }
        }
        Ok(())
    }

    /// Zero-probability noise is a no-op and takes the noiseless path.
    pub fn is_noop(&self) -> bool {
        self.one_qubit_depolarizing_prob == 0.0 && self.two_qubit_depolarizing_prob == 0.0
    }
}

/// `2^Q` complex amplitudes of a `Q`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// The all-zeros computational basis state.
    pub fn zero_state(num_qubits: usize) -> Result<Self, SimError> {
        if num_qubits > MAX_QUBITS {
            return Err(SimError::TooManyQubits(num_qubits));
        }
        let mut amps = vec![Complex64::ZERO; 1 << num_qubits];
        amps[0] = Complex64::ONE;
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probability(&self, index: u64) -> f64 {
        self.amps[index as usize].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies a 2x2 matrix to `target`, restricted to indices where all
    /// `control_mask` bits are set.
    fn apply_single(&mut self, target: usize, control_mask: u64, m: [Complex64; 4]) {
        let stride = 1usize << target;
        let dim = self.amps.len();
        let cmask = control_mask as usize;
        let mut base = 0;
        while base < dim {
            for offset in base..base + stride {
                if offset & cmask == cmask {
                    let i1 = offset + stride;
                    let a0 = self.amps[offset];
                    let a1 = self.amps[i1];
                    self.amps[offset] = m[0] * a0 + m[1] * a1;
                    self.amps[i1] = m[2] * a0 + m[3] * a1;
                }
            }
            base += 2 * stride;
        }
    }

    fn apply_pauli_x(&mut self, qubit: usize, control_mask: u64) {
        let stride = 1usize << qubit;
        let dim = self.amps.len();
        let cmask = control_mask as usize;
        let mut base = 0;
        while base < dim {
            for offset in base..base + stride {
                if offset & cmask == cmask {
                    self.amps.swap(offset, offset + stride);
                }
            }
            base += 2 * stride;
        }
    }

    fn apply_pauli_y(&mut self, qubit: usize) {
        let i = Complex64::I;
        self.apply_single(qubit, 0, [Complex64::ZERO, -i, i, Complex64::ZERO]);
    }

    fn apply_pauli_z(&mut self, qubit: usize) {
        let stride = 1usize << qubit;
        for (index, amp) in self.amps.iter_mut().enumerate() {
            if index & stride != 0 {
                *amp = -*amp;
            }
        }
    }

    /// Applies one gate with already-resolved angles.
    pub fn apply_gate(&mut self, gate: &Gate, params: &[f64]) {
        match gate {
            Gate::X { qubit } => self.apply_pauli_x(*qubit, 0),
            Gate::H { qubit } => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                self.apply_single(*qubit, 0, [h, h, h, -h]);
            }
            Gate::Rx { qubit, angle } => {
                let half = angle.resolve(params) / 2.0;
                let c = Complex64::new(half.cos(), 0.0);
                let s = Complex64::new(0.0, -half.sin());
                self.apply_single(*qubit, 0, [c, s, s, c]);
            }
            Gate::Ry { qubit, angle } => {
                let half = angle.resolve(params) / 2.0;
                let c = Complex64::new(half.cos(), 0.0);
                let s = Complex64::new(half.sin(), 0.0);
                self.apply_single(*qubit, 0, [c, -s, s, c]);
            }
            Gate::Rz { qubit, angle } => {
                let half = angle.resolve(params) / 2.0;
                let phase = Complex64::new(0.0, half).exp();
                self.apply_single(
                    *qubit,
                    0,
                    [phase.conj(), Complex64::ZERO, Complex64::ZERO, phase],
                );
            }
            Gate::Cnot { control, target } => self.apply_pauli_x(*target, 1 << control),
            Gate::Cry {
                control,
                target,
                angle,
            } => {
                let half = angle.resolve(params) / 2.0;
                let c = Complex64::new(half.cos(), 0.0);
                let s = Complex64::new(half.sin(), 0.0);
                self.apply_single(*target, 1 << control, [c, -s, s, c]);
            }
            Gate::Mcx { controls, target } => {
                let mask = controls.iter().fold(0u64, |m, &q| m | (1 << q));
                self.apply_pauli_x(*target, mask);
            }
        }
    }

    /// Exact outcome probabilities; entries below [`PROBABILITY_FLOOR`]
    /// are omitted.
    pub fn exact_distribution(&self) -> BTreeMap<BitString, f64> {
        self.amps
            .iter()
            .enumerate()
            .filter_map(|(index, amp)| {
                let p = amp.norm_sqr();
                (p >= PROBABILITY_FLOOR).then(|| (BitString::new(index as u64, self.num_qubits), p))
            })
            .collect()
    }

    /// Multinomial shot sampling with a caller-supplied generator.
    pub fn sample_with_rng<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Histogram {
        let mut uniforms: Vec<f64> = (0..shots).map(|_| rng.random::<f64>()).collect();
        uniforms.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mut histogram = Histogram::new(self.num_qubits);
        let mut cumulative = 0.0;
        let mut draw = 0usize;
        let mut last_nonzero = 0u64;
        for (index, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            last_nonzero = index as u64;
            cumulative += p;
            let start = draw;
            while draw < uniforms.len() && uniforms[draw] < cumulative {
                draw += 1;
            }
            if draw > start {
                histogram.record(index as u64, (draw - start) as u64);
            }
            if draw == uniforms.len() {
                break;
            }
        }
        // floating-point shortfall: assign stragglers to the last
        // nonzero-probability state
        if draw < uniforms.len() {
            histogram.record(last_nonzero, (uniforms.len() - draw) as u64);
        }
        histogram
    }
}

/// Runs `circuit` on `|0...0>`.
pub fn run(circuit: &Circuit, params: &[f64]) -> Result<Statevector, SimError> {
    if params.len() != circuit.num_params() {
        return Err(SimError::ParameterCountMismatch {
            got: params.len(),
            expected: circuit.num_params(),
        });
    }
    let mut state = Statevector::zero_state(circuit.num_qubits())?;
    for gate in circuit.gates() {
        state.apply_gate(gate, params);
    }
    Ok(state)
}

/// Seeded multinomial sampling; identical seeds give identical
/// histograms.
pub fn sample(state: &Statevector, shots: u64, seed: u64) -> Result<Histogram, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    let mut rng = seeded_rng(seed, stream_id(purpose::FINAL_SAMPLE, 0, 0));
    Ok(state.sample_with_rng(shots, &mut rng))
}

/// Runs the circuit once, inserting random Pauli errors after gates.
pub fn run_with_trajectory_noise<R: Rng + ?Sized>(
    circuit: &Circuit,
    params: &[f64],
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<Statevector, SimError> {
    if params.len() != circuit.num_params() {
        return Err(SimError::ParameterCountMismatch {
            got: params.len(),
            expected: circuit.num_params(),
        });
    }
    noise.validate()?;
    let mut state = Statevector::zero_state(circuit.num_qubits())?;
    for gate in circuit.gates() {
        state.apply_gate(gate, params);
        let operands = gate.operands();
        let p = if operands.len() == 1 {
            noise.one_qubit_depolarizing_prob
        } else {
            noise.two_qubit_depolarizing_prob
        };
        if p > 0.0 && rng.random::<f64>() < p {
            insert_random_pauli(&mut state, &operands, rng);
        }
    }
    Ok(state)
}

/// Applies a uniformly random non-identity Pauli string on `qubits`.
fn insert_random_pauli<R: Rng + ?Sized>(state: &mut Statevector, qubits: &[usize], rng: &mut R) {
    let choices = 4u32.pow(qubits.len() as u32);
    let mut code = rng.random_range(1..choices);
    for &q in qubits {
        match code % 4 {
            1 => state.apply_pauli_x(q, 0),
            2 => state.apply_pauli_y(q),
            3 => state.apply_pauli_z(q),
            _ => {}
        }
        code /= 4;
    }
}

/// Noisy sampling: aggregates `shots_per_trajectory` shots from each of
/// `trajectories` independent Pauli-error trajectories.
///
/// Pauli insertion draws from `(noise.trajectory_seed, trajectory index)`
/// and shot sampling from `(seed, trajectory index)`, so results are
/// reproducible and independent of scheduling. Zero-probability noise
/// short-circuits to a single noiseless run sampled with the same seed
/// discipline as [`sample`].
pub fn run_noisy(
    circuit: &Circuit,
    params: &[f64],
    noise: &NoiseConfig,
    trajectories: u64,
    shots_per_trajectory: u64,
    seed: u64,
) -> Result<Histogram, SimError> {
    noise.validate()?;
    if trajectories == 0 || shots_per_trajectory == 0 {
        return Err(SimError::NoShots);
    }
    if noise.is_noop() {
        let state = run(circuit, params)?;
        return sample(&state, trajectories * shots_per_trajectory, seed);
    }
    let mut histogram = Histogram::new(circuit.num_qubits());
    for trajectory in 0..trajectories {
        let mut noise_rng = seeded_rng(
            noise.trajectory_seed,
            stream_id(purpose::NOISE_TRAJECTORY, trajectory, 0),
        );
        let state = run_with_trajectory_noise(circuit, params, noise, &mut noise_rng)?;
        let mut shot_rng = seeded_rng(seed, stream_id(purpose::FINAL_SAMPLE, trajectory, 0));
        histogram.merge(&state.sample_with_rng(shots_per_trajectory, &mut shot_rng));
    }
    Ok(histogram)
}

/// Bitstring counts from repeated measurement.
///
/// Serializes as `{"0101...": count}` with qubit 0 as the first
/// character of each key; iteration order is ascending basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    num_qubits: usize,
    counts: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            counts: BTreeMap::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn record(&mut self, index: u64, count: u64) {
        *self.counts.entry(index).or_insert(0) += count;
    }

    pub fn merge(&mut self, other: &Histogram) {
        debug_assert_eq!(self.num_qubits, other.num_qubits);
        for (&index, &count) in &other.counts {
            self.record(index, count);
        }
    }

    pub fn total_shots(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, index: u64) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BitString, u64)> + '_ {
        self.counts
            .iter()
            .map(|(&index, &count)| (BitString::new(index, self.num_qubits), count))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl Serialize for Histogram {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.counts.len()))?;
        for (bits, count) in self.iter() {
            map.serialize_entry(&bits.to_string(), &count)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Histogram {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct HistogramVisitor;
        impl<'de> Visitor<'de> for HistogramVisitor {
            type Value = Histogram;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a map from bitstrings to counts")
            }

            fn visit_map<M: MapAccess<'de>>(self, mut access: M) -> Result<Self::Value, M::Error> {
                let mut histogram: Option<Histogram> = None;
                while let Some((key, count)) = access.next_entry::<BitString, u64>()? {
                    let h = histogram.get_or_insert_with(|| Histogram::new(key.len()));
                    h.record(key.index(), count);
                }
                Ok(histogram.unwrap_or_else(|| Histogram::new(0)))
            }
        }
        deserializer.deserialize_map(HistogramVisitor)
    }
}
