//! Coordinate ascent on the hyperparameters of the Gaussian SBL model.
//!
//! Each update replaces one precision by the maximizer of its section,
//! `1 / (mu_i^2 - sigma_i^2)`, or prunes the column when the section has no
//! finite maximizer.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::kappa_pruning_rule;
use crate::section::{
    compute_section_stats, ActiveSystem, Maximizer, SectionError, SectionStats, SparseProblem,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("precision for column {index} must be finite and positive, got {gamma}")]
    InvalidGamma { index: usize, gamma: f64 },
    #[error(transparent)]
    Section(#[from] SectionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// Columns visited in index order.
    #[default]
    Cyclic,
    /// Each step updates the column whose update raises the evidence most.
    LargestGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub kappa: f64,
    pub max_sweeps: usize,
    pub evidence_rel_tol: f64,
    pub sweep_order: SweepOrder,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            max_sweeps: 1000,
            evidence_rel_tol: 1e-8,
            sweep_order: SweepOrder::Cyclic,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.evidence_rel_tol > 0.0 && self.evidence_rel_tol.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "evidence_rel_tol must be positive, got {}",
                self.evidence_rel_tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(SolverError::InvalidConfig(
                "max_sweeps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Finite precisions of the active columns with the cached posterior over them.
/// Columns outside `active` are pruned (`gamma = inf`).
#[derive(Debug, Clone)]
pub struct ModelState {
    columns: usize,
    active: BTreeMap<usize, f64>,
    system: ActiveSystem,
    posterior_mean: DVector<f64>,
    log_evidence: f64,
}

impl ModelState {
    /// Every column pruned.
    pub fn empty(problem: &SparseProblem) -> Result<Self, SolverError> {
        Self::from_active(problem, BTreeMap::new())
    }

    pub fn from_active(
        problem: &SparseProblem,
        active: BTreeMap<usize, f64>,
    ) -> Result<Self, SolverError> {
        for (&index, &gamma) in &active {
            problem.check_index(index)?;
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(SolverError::InvalidGamma { index, gamma });
            }
        }
        let system = ActiveSystem::new(problem, active.iter().map(|(&j, &g)| (j, g)))?;
        let posterior_mean = system.posterior_mean();
        let log_evidence = evidence_from_system(problem, &system);
        Ok(Self {
            columns: problem.columns(),
            active,
            system,
            posterior_mean,
            log_evidence,
        })
    }

    pub fn active(&self) -> &BTreeMap<usize, f64> {
        &self.active
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active.contains_key(&i)
    }

    /// `gamma_i`, or `inf` when pruned.
    pub fn gamma(&self, i: usize) -> f64 {
        self.active.get(&i).copied().unwrap_or(f64::INFINITY)
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.active.keys().copied().collect()
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Cached log evidence of this state.
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// Posterior mean of the active weights, in index order.
    pub fn active_mean(&self) -> &DVector<f64> {
        &self.posterior_mean
    }

    /// Posterior covariance of the active weights, in index order.
    pub fn active_covariance(&self) -> DMatrix<f64> {
        self.system.inverse()
    }

    pub(crate) fn system(&self) -> &ActiveSystem {
        &self.system
    }

    pub(crate) fn check_problem(&self, problem: &SparseProblem) -> Result<(), SectionError> {
        if self.columns == problem.columns() {
            Ok(())
        } else {
            Err(SectionError::InvalidProblem(format!(
                "state has {} columns but problem has {}",
                self.columns,
                problem.columns()
            )))
        }
    }
}

/// `log N(y; 0, C)` with `C = I / lambda + A_S diag(gamma_S)^{-1} A_S^T`.
///
/// Uses `log|C| = -N log lambda - sum log gamma + log|H|` and
/// `y^T C^{-1} y = lambda y^T M y`.
fn evidence_from_system(problem: &SparseProblem, system: &ActiveSystem) -> f64 {
    let n = problem.rows() as f64;
    let lambda = problem.noise_precision();
    let log_det = -n * lambda.ln() + system.log_det_scaled();
    let quad = lambda * system.projected_energy();
    -0.5 * (n * (2.0 * PI).ln() + log_det + quad)
}

/// Log evidence of `state`, recomputed from scratch.
pub fn log_evidence(problem: &SparseProblem, state: &ModelState) -> Result<f64, SolverError> {
    state.check_problem(problem)?;
    let system = ActiveSystem::new(problem, state.active.iter().map(|(&j, &g)| (j, g)))?;
    Ok(evidence_from_system(problem, &system))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateAction {
    Added,
    ReEstimated,
    Deleted,
    Unchanged,
}

/// The precision column `i` should take given its section statistics:
/// `Some(gamma_hat)` when the kappa rule admits it, `None` to prune.
///
/// Admission uses `max(kappa, 1)`: below 1 the rule would admit sections whose
/// maximizer is at infinity.
pub fn proposed_gamma(stats: &SectionStats, kappa: f64) -> Option<f64> {
    if !kappa_pruning_rule(stats, kappa.max(1.0)) {
        return None;
    }
    match stats.closed_form_maximizer() {
        Maximizer::Finite(g) => Some(g),
        Maximizer::Infinite => None,
    }
}

/// Sets column `i` to the maximizer of its section (or prunes it).
pub fn update_coordinate(
    problem: &SparseProblem,
    state: &ModelState,
    i: usize,
    config: &SolverConfig,
) -> Result<(ModelState, UpdateAction), SolverError> {
    let stats = compute_section_stats(problem, state, i)?;
    apply_update(problem, state, i, proposed_gamma(&stats, config.kappa))
}

fn apply_update(
    problem: &SparseProblem,
    state: &ModelState,
    i: usize,
    gamma: Option<f64>,
) -> Result<(ModelState, UpdateAction), SolverError> {
    let was_active = state.is_active(i);
    let action = match (gamma, was_active) {
        (Some(_), false) => UpdateAction::Added,
        (Some(_), true) => UpdateAction::ReEstimated,
        (None, true) => UpdateAction::Deleted,
        (None, false) => return Ok((state.clone(), UpdateAction::Unchanged)),
    };
    let mut active = state.active.clone();
    match gamma {
        Some(g) => {
            active.insert(i, g);
        }
        None => {
            active.remove(&i);
        }
    }
    Ok((ModelState::from_active(problem, active)?, action))
}

/// Per-sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub log_evidence: f64,
    pub active_size: usize,
    pub added: usize,
    pub deleted: usize,
    pub re_estimated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub initial_log_evidence: f64,
    pub sweeps: Vec<SweepRecord>,
    /// Smallest change of log evidence over any single update.
    pub min_update_delta: f64,
    pub updates: usize,
    pub converged: bool,
}

impl SolveTrace {
    pub fn evidence(&self) -> Vec<f64> {
        self.sweeps.iter().map(|s| s.log_evidence).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub state: ModelState,
    pub trace: SolveTrace,
}

/// Runs sweeps from the empty model until a sweep makes no structural change
/// and moves the log evidence by less than `evidence_rel_tol` relative, or
/// `max_sweeps` is reached (`converged = false`).
pub fn solve(problem: &SparseProblem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let mut state = ModelState::empty(problem)?;
    let mut trace = SolveTrace {
        initial_log_evidence: state.log_evidence,
        sweeps: Vec::new(),
        min_update_delta: f64::INFINITY,
        updates: 0,
        converged: false,
    };
    let m = problem.columns();
    for sweep in 1..=config.max_sweeps {
        let before = state.log_evidence;
        let mut record = SweepRecord {
            sweep,
            log_evidence: before,
            active_size: 0,
            added: 0,
            deleted: 0,
            re_estimated: 0,
        };
        for step in 0..m {
            let (next, action) = match config.sweep_order {
                SweepOrder::Cyclic => update_coordinate(problem, &state, step, config)?,
                SweepOrder::LargestGain => match best_update(problem, &state, config)? {
                    Some((i, gamma)) => apply_update(problem, &state, i, gamma)?,
                    None => break,
                },
            };
            match action {
                UpdateAction::Added => record.added += 1,
                UpdateAction::Deleted => record.deleted += 1,
                UpdateAction::ReEstimated => record.re_estimated += 1,
                UpdateAction::Unchanged => {}
            }
            trace.min_update_delta = trace
                .min_update_delta
                .min(next.log_evidence - state.log_evidence);
            trace.updates += 1;
            state = next;
        }
        record.log_evidence = state.log_evidence;
        record.active_size = state.active.len();
        let structural = record.added + record.deleted > 0;
        trace.sweeps.push(record);
        let change = (state.log_evidence - before).abs();
        if !structural && change <= config.evidence_rel_tol * before.abs() {
            trace.converged = true;
            break;
        }
    }
    Ok(SolveResult { state, trace })
}

/// Column and proposed precision with the largest positive evidence gain,
/// scored in parallel against the frozen `state`.
fn best_update(
    problem: &SparseProblem,
    state: &ModelState,
    config: &SolverConfig,
) -> Result<Option<(usize, Option<f64>)>, SolverError> {
    let scored = (0..problem.columns())
        .into_par_iter()
        .map(|i| -> Result<(usize, Option<f64>, f64), SolverError> {
            let stats = compute_section_stats(problem, state, i)?;
            let proposal = proposed_gamma(&stats, config.kappa);
            let gain =
                stats.log_gain(proposal.unwrap_or(f64::INFINITY)) - stats.log_gain(state.gamma(i));
            Ok((i, proposal, gain))
        })
        .collect::<Result<Vec<_>, _>>()?;
    // lowest index wins ties
    let best = scored
        .into_iter()
        .fold(None::<(usize, Option<f64>, f64)>, |acc, cand| match acc {
            Some(a) if a.2 >= cand.2 => Some(a),
            _ => Some(cand),
        });
    Ok(best.filter(|b| b.2 > 1e-14).map(|(i, g, _)| (i, g)))
}

/// Posterior over all `M` weights: zero mean on pruned columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: DVector<f64>,
    pub active_indices: Vec<usize>,
    pub active_covariance: DMatrix<f64>,
}

/// `Sigma = (lambda A_S^T A_S + diag(gamma_S))^{-1}`, `m = lambda Sigma A_S^T y`.
pub fn posterior(problem: &SparseProblem, state: &ModelState) -> Result<Posterior, SolverError> {
    state.check_problem(problem)?;
    let system = ActiveSystem::new(problem, state.active.iter().map(|(&j, &g)| (j, g)))?;
    let active_mean = system.posterior_mean();
    let mut mean = DVector::zeros(problem.columns());
    for (r, &j) in system.indices().iter().enumerate() {
        mean[j] = active_mean[r];
    }
    Ok(Posterior {
        mean,
        active_indices: system.indices().to_vec(),
        active_covariance: system.inverse(),
    })
}
