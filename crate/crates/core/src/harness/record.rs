//! Summary of one solver run.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::datagen::{generate, Planted, SyntheticSpec};
use super::HarnessError;
use crate::section::SparseProblem;
use crate::solver::{posterior, solve, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: SolverConfig,
    #[serde(default)]
    pub spec: Option<SyntheticSpec>,
    /// Sorted; empty when the problem carries no ground truth.
    pub planted_support: Vec<usize>,
    /// Sorted.
    pub recovered_support: Vec<usize>,
    pub evidence_trace: Vec<f64>,
    pub active_sizes: Vec<usize>,
    pub min_update_delta: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub log_evidence: f64,
    pub posterior_mean: Vec<f64>,
    /// `|x_hat - x|^2 / |x|^2` against the planted weights.
    pub nmse: Option<f64>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn exact_recovery(&self) -> Option<bool> {
        self.nmse
            .map(|_| self.planted_support == self.recovered_support)
    }

    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_time_s = other.wall_time_s;
        &a == other
    }
}

pub fn nmse(estimate: &[f64], truth: &[f64]) -> f64 {
    let err: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let norm: f64 = truth.iter().map(|b| b * b).sum();
    if norm > 0.0 {
        err / norm
    } else {
        err
    }
}

/// Solves `problem` and assembles its record.
pub fn run(
    problem: &SparseProblem,
    config: &SolverConfig,
    spec: Option<&SyntheticSpec>,
    planted: Option<&Planted>,
) -> Result<RunRecord, HarnessError> {
    let start = Instant::now();
    let result = solve(problem, config)?;
    let post = posterior(problem, &result.state)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let mean: Vec<f64> = post.mean.iter().copied().collect();
    Ok(RunRecord {
        config: config.clone(),
        spec: spec.cloned(),
        planted_support: planted.map(|p| p.support.clone()).unwrap_or_default(),
        recovered_support: result.state.active_indices(),
        evidence_trace: result.trace.evidence(),
        active_sizes: result.trace.sweeps.iter().map(|s| s.active_size).collect(),
        min_update_delta: result.trace.min_update_delta,
        sweeps: result.trace.sweeps.len(),
        converged: result.trace.converged,
        log_evidence: result.state.log_evidence(),
        nmse: planted.map(|p| nmse(&mean, &p.weights)),
        posterior_mean: mean,
        wall_time_s,
    })
}

/// Generates from `spec` and solves.
pub fn run_synthetic(
    spec: &SyntheticSpec,
    config: &SolverConfig,
) -> Result<(RunRecord, SparseProblem), HarnessError> {
    let (problem, planted) = generate(spec)?;
    Ok((run(&problem, config, Some(spec), Some(&planted))?, problem))
}

/// `y - A x_hat`.
pub fn residual(problem: &SparseProblem, mean: &[f64]) -> DVector<f64> {
    problem.observation() - problem.dictionary() * DVector::from_column_slice(mean)
}
