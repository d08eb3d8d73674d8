//! Repeated planted-recovery trials.

use serde::{Deserialize, Serialize};

use super::datagen::SyntheticSpec;
use super::record::{run_synthetic, RunRecord};
use super::HarnessError;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub trials: usize,
    pub exact_recoveries: usize,
    pub converged: usize,
    pub mean_nmse: f64,
    pub median_nmse: f64,
    /// Smallest per-update change of log evidence over all trials.
    pub min_update_delta: f64,
    pub mean_sweeps: f64,
    pub total_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub summary: BenchSummary,
    pub records: Vec<RunRecord>,
}

/// Runs `trials` problems from `spec`, trial `t` using seed `spec.seed + t`.
pub fn bench(
    spec: &SyntheticSpec,
    config: &SolverConfig,
    trials: usize,
) -> Result<BenchReport, HarnessError> {
    let records = (0..trials as u64)
        .map(|t| {
            let trial = SyntheticSpec {
                seed: spec.seed.wrapping_add(t),
                ..spec.clone()
            };
            run_synthetic(&trial, config).map(|(r, _)| r)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchReport {
        summary: summarize(&records),
        records,
    })
}

pub fn summarize(records: &[RunRecord]) -> BenchSummary {
    let n = records.len();
    let mut nmses: Vec<f64> = records.iter().filter_map(|r| r.nmse).collect();
    nmses.sort_by(f64::total_cmp);
    let median_nmse = match nmses.len() {
        0 => f64::NAN,
        k if k % 2 == 1 => nmses[k / 2],
        k => 0.5 * (nmses[k / 2 - 1] + nmses[k / 2]),
    };
    let mean = |xs: &mut dyn Iterator<Item = f64>, count: usize| {
        if count == 0 {
            f64::NAN
        } else {
            xs.sum::<f64>() / count as f64
        }
    };
    BenchSummary {
        trials: n,
        exact_recoveries: records
            .iter()
            .filter(|r| r.exact_recovery() == Some(true))
            .count(),
        converged: records.iter().filter(|r| r.converged).count(),
        mean_nmse: mean(&mut nmses.iter().copied(), nmses.len()),
        median_nmse,
        min_update_delta: records
            .iter()
            .map(|r| r.min_update_delta)
            .fold(f64::INFINITY, f64::min),
        mean_sweeps: mean(&mut records.iter().map(|r| r.sweeps as f64), n),
        total_wall_time_s: records.iter().map(|r| r.wall_time_s).sum(),
    }
}
