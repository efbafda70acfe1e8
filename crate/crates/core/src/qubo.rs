//! Compilation of the penalty objective into QUBO and Ising form, and
//! evaluation of the resulting diagonal Hamiltonian.
//!
//! The QUBO expansion stays in exact integer arithmetic (profits,
//! weights, budgets and the penalty constant are all integers), and the
//! spin substitution `x = (1 - z)/2` only introduces powers of two, so
//! the Ising coefficients are exact in `f64` as well. The Hamiltonian is
//! diagonal; bitstring evaluation replaces any operator construction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bits::BitString;
use crate::gap::{GapInstance, PenaltyObjective};
use crate::layout::{LayoutKind, VariableLayout};

#[derive(Debug, Error, PartialEq)]
pub enum QuboError {
    #[error("operation requires a {expected} layout, got {got}")]
    WrongLayoutKind {
        expected: LayoutKind,
        got: LayoutKind,
    },
    #[error("bitstring has {got} bits, model expects {expected}")]
    BitStringLength { got: usize, expected: usize },
    #[error("distribution probabilities sum to {0}, expected 1 within 1e-9")]
    UnnormalizedDistribution(f64),
}

/// Quadratic polynomial over bits: `offset + sum q[a][a] x_a +
/// sum_{a<b} q[a][b] x_a x_b`, with exact integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuboModel {
    num_vars: usize,
    offset: i64,
    linear: Vec<i64>,
    quadratic: BTreeMap<(usize, usize), i64>,
}

impl QuboModel {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            offset: 0,
            linear: vec![0; num_vars],
            quadratic: BTreeMap::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn add_offset(&mut self, value: i64) {
        self.offset += value;
    }

    pub fn add_linear(&mut self, var: usize, coeff: i64) {
        self.linear[var] += coeff;
    }

    pub fn add_quadratic(&mut self, a: usize, b: usize, coeff: i64) {
        assert_ne!(a, b, "diagonal terms belong in add_linear");
        let key = (a.min(b), a.max(b));
        *self.quadratic.entry(key).or_insert(0) += coeff;
    }

    /// Adds `multiplier * (constant + sum coeff_a x_a)^2`, expanded with
    /// `x^2 = x`.
    pub fn add_squared_linear_form(
        &mut self,
        multiplier: i64,
        constant: i64,
        terms: &[(usize, i64)],
    ) {
        self.add_offset(multiplier * constant * constant);
        for (idx, &(var, coeff)) in terms.iter().enumerate() {
            self.add_linear(var, multiplier * coeff * (2 * constant + coeff));
            for &(other, other_coeff) in &terms[idx + 1..] {
                self.add_quadratic(var, other, 2 * multiplier * coeff * other_coeff);
            }
        }
    }

    pub fn value(&self, bits: BitString) -> Result<i64, QuboError> {
        if bits.len() != self.num_vars {
            return Err(QuboError::BitStringLength {
                got: bits.len(),
                expected: self.num_vars,
            });
        }
        let mut value = self.offset;
        for (a, &coeff) in self.linear.iter().enumerate() {
            if bits.bit(a) == 1 {
                value += coeff;
            }
        }
        for (&(a, b), &coeff) in &self.quadratic {
            if bits.bit(a) == 1 && bits.bit(b) == 1 {
                value += coeff;
            }
        }
        Ok(value)
    }
}

/// Expands the penalty objective over the full VQE variable layout:
/// assignment bits, task slacks, and binary budget-slack registers.
pub fn build_qubo(instance: &GapInstance, layout: &VariableLayout) -> Result<QuboModel, QuboError> {
    if layout.kind() != LayoutKind::VqeFull {
        return Err(QuboError::WrongLayoutKind {
            expected: LayoutKind::VqeFull,
            got: layout.kind(),
        });
    }
    let (t, a) = (instance.num_tasks, instance.num_agents);
    let penalty = PenaltyObjective::for_instance(instance).constant;
    let mut qubo = QuboModel::new(layout.qubit_count());

    // profit term, negated for minimization
    for i in 0..t {
        for j in 0..a {
            qubo.add_linear(layout.qubit_of_x(i, j), -instance.profits[i][j]);
        }
    }
    // per-task penalty: C * (1 - sum_j x_ij - s_i)^2
    for i in 0..t {
        let mut terms: Vec<(usize, i64)> = (0..a).map(|j| (layout.qubit_of_x(i, j), -1)).collect();
        terms.push((layout.qubit_of_s(i), -1));
        qubo.add_squared_linear_form(penalty, 1, &terms);
    }
    // per-agent penalty: C * (B_j - sum_i w_ij x_ij - sum_k 2^k b_jk)^2
    for j in 0..a {
        let mut terms: Vec<(usize, i64)> = (0..t)
            .map(|i| (layout.qubit_of_x(i, j), -instance.weights[i][j]))
            .collect();
        for k in 0..layout.slack_width(j) {
            terms.push((layout.qubit_of_slack_bit(j, k), -(1i64 << k)));
        }
        qubo.add_squared_linear_form(penalty, instance.budgets[j], &terms);
    }
    Ok(qubo)
}

/// Spin form of a QUBO under `x_i = (1 - z_i)/2`: evaluated as
/// `offset + sum h_i z_i - sum_{i>j} J_ij z_i z_j` with `z = 1 - 2 bit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    num_vars: usize,
    offset: f64,
    h: Vec<f64>,
    /// `(i, j, J_ij)` with `i > j`.
    couplings: Vec<(usize, usize, f64)>,
}

impl IsingModel {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn evaluate(&self, bits: BitString) -> Result<f64, QuboError> {
        if bits.len() != self.num_vars {
            return Err(QuboError::BitStringLength {
                got: bits.len(),
                expected: self.num_vars,
            });
        }
        let z = |i: usize| 1.0 - 2.0 * bits.bit(i) as f64;
        let mut value = self.offset;
        for (i, &h) in self.h.iter().enumerate() {
            value += h * z(i);
        }
        for &(i, j, coupling) in &self.couplings {
            value -= coupling * z(i) * z(j);
        }
        Ok(value)
    }

    /// Evaluates the index form directly; used by exhaustive scans.
    pub fn evaluate_index(&self, index: u64) -> f64 {
        let z = |i: usize| 1.0 - 2.0 * ((index >> i) & 1) as f64;
        let mut value = self.offset;
        for (i, &h) in self.h.iter().enumerate() {
            value += h * z(i);
        }
        for &(i, j, coupling) in &self.couplings {
            value -= coupling * z(i) * z(j);
        }
        value
    }

    /// Expectation of the Hamiltonian under an outcome distribution.
    pub fn expectation(&self, distribution: &BTreeMap<BitString, f64>) -> Result<f64, QuboError> {
        let total: f64 = distribution.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(QuboError::UnnormalizedDistribution(total));
        }
        let mut value = 0.0;
        for (&bits, &p) in distribution {
            value += p * self.evaluate(bits)?;
        }
        Ok(value)
    }

    /// Coefficient export for external solvers:
    /// `{"offset": f, "h": [f], "J": [[i, j, f]]}`.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "offset": self.offset,
            "h": self.h,
            "J": self.couplings.iter().map(|&(i, j, v)| json!([i, j, v])).collect::<Vec<_>>(),
        })
    }
}

/// Applies the substitution `x_i = (1 - z_i)/2` term by term.
pub fn to_ising(qubo: &QuboModel) -> IsingModel {
    let n = qubo.num_vars;
    let mut offset = qubo.offset as f64;
    let mut h = vec![0.0; n];
    let mut couplings = BTreeMap::new();
    for (a, &coeff) in qubo.linear.iter().enumerate() {
        // c x = c/2 - c/2 z
        offset += coeff as f64 / 2.0;
        h[a] -= coeff as f64 / 2.0;
    }
    for (&(a, b), &coeff) in &qubo.quadratic {
        // c x_a x_b = c/4 (1 - z_a - z_b + z_a z_b)
        let quarter = coeff as f64 / 4.0;
        offset += quarter;
        h[a] -= quarter;
        h[b] -= quarter;
        // evaluate() subtracts J z_a z_b, so store the negated coefficient
        *couplings.entry((a.max(b), a.min(b))).or_insert(0.0) -= quarter;
    }
    IsingModel {
        num_vars: n,
        offset,
        h,
        couplings: couplings.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
    }
}
