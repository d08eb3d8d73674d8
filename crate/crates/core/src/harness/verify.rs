//! Batch agreement check of the pruning criteria on random Gaussian sections.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::criteria::{
    kappa_pruning_rule, theorem1_check, theorem2_check, TriState, DEFAULT_GRID, GRID_WIDTHS,
};
use crate::priors::ScaleFamilyPrior;
use crate::quadrature::QuadratureSpec;
use crate::section::{argmax_section_likelihood_numeric, Maximizer, SectionFunction, SectionStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub n_sections: usize,
    pub seed: u64,
    pub mu_range: (f64, f64),
    pub sigma2_range: (f64, f64),
    /// Sections with `|mu^2 / sigma2 - 1|` below this are reported separately.
    pub boundary_band: f64,
    /// Extra sections with `mu = sigma` exactly, appended after the random ones.
    pub boundary_cases: usize,
    pub kappa: f64,
    pub quadrature: QuadratureSpec,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_sections: 1000,
            seed: 0,
            mu_range: (-3.0, 3.0),
            sigma2_range: (0.1, 4.0),
            boundary_band: 1e-3,
            boundary_cases: 0,
            kappa: 1.0,
            quadrature: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionVerdictRecord {
    pub index: usize,
    pub mu: f64,
    pub sigma2: f64,
    pub theorem1: TriState,
    pub theorem2: TriState,
    pub kappa_rule: bool,
    /// Whether the numeric maximizer found a finite precision.
    pub numeric_finite: Option<bool>,
    pub agree: bool,
    pub boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    /// Counts keyed by `"<theorem1>/<theorem2>"`.
    pub theorem_matrix: BTreeMap<String, usize>,
    /// Counts keyed by `"<kappa_rule>/<numeric_finite>"`.
    pub kappa_vs_numeric: BTreeMap<String, usize>,
    pub violations: Vec<usize>,
    pub boundary: Vec<usize>,
    pub sections: Vec<SectionVerdictRecord>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn tri(t: TriState) -> &'static str {
    match t {
        TriState::Holds => "holds",
        TriState::Fails => "fails",
        TriState::Undetermined => "undetermined",
    }
}

/// `(mu, sigma2)` pairs drawn uniformly from the configured ranges.
pub fn sample_sections(config: &VerifyConfig) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (m0, m1) = config.mu_range;
    let (s0, s1) = config.sigma2_range;
    let mut out: Vec<(f64, f64)> = (0..config.n_sections)
        .map(|_| (rng.random_range(m0..m1), rng.random_range(s0..s1)))
        .collect();
    for j in 0..config.boundary_cases {
        let sigma2 = s0 + (s1 - s0) * (j as f64 + 0.5) / config.boundary_cases as f64;
        out.push((sigma2.sqrt(), sigma2));
    }
    out
}

fn check_one(
    index: usize,
    mu: f64,
    sigma2: f64,
    config: &VerifyConfig,
) -> Result<SectionVerdictRecord, HarnessError> {
    let stats = SectionStats::new(index, mu, sigma2)?;
    let f = SectionFunction::gaussian(stats);
    let t1 = theorem1_check(&f, GRID_WIDTHS * stats.sigma(), DEFAULT_GRID)?.verdict;
    let t2 = theorem2_check(&f)?.verdict;
    let kappa_rule = kappa_pruning_rule(&stats, config.kappa);
    let boundary = (mu * mu / sigma2 - 1.0).abs() < config.boundary_band;
    let (numeric_finite, error) = match argmax_section_likelihood_numeric(
        &f,
        &ScaleFamilyPrior::gaussian(),
        &config.quadrature,
    ) {
        Ok(m) => (Some(matches!(m, Maximizer::Finite(_))), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let agree = numeric_finite == Some(kappa_rule)
        && t2.holds() == kappa_rule
        && t1.holds() == !kappa_rule
        && !(t1.holds() && t2.holds());
    Ok(SectionVerdictRecord {
        index,
        mu,
        sigma2,
        theorem1: t1,
        theorem2: t2,
        kappa_rule,
        numeric_finite,
        agree,
        boundary,
        error,
    })
}

/// Runs every criterion and the numeric maximizer on each sampled section.
///
/// A section is a violation when the two theorems both hold, or when it lies
/// outside the boundary band and the decisions disagree.
pub fn verify(config: &VerifyConfig) -> Result<VerifyReport, HarnessError> {
    config.quadrature.validate()?;
    if !(config.kappa > 0.0) {
        return Err(HarnessError::Spec(format!(
            "kappa must be positive, got {}",
            config.kappa
        )));
    }
    let sections = sample_sections(config)
        .into_par_iter()
        .enumerate()
        .map(|(i, (mu, s2))| check_one(i, mu, s2, config))
        .collect::<Result<Vec<_>, _>>()?;

    let mut theorem_matrix = BTreeMap::new();
    let mut kappa_vs_numeric = BTreeMap::new();
    let mut violations = Vec::new();
    let mut boundary = Vec::new();
    for r in &sections {
        *theorem_matrix
            .entry(format!("{}/{}", tri(r.theorem1), tri(r.theorem2)))
            .or_insert(0) += 1;
        let numeric = r
            .numeric_finite
            .map_or("error".to_string(), |b| b.to_string());
        *kappa_vs_numeric
            .entry(format!("{}/{}", r.kappa_rule, numeric))
            .or_insert(0) += 1;
        let exclusive = !(r.theorem1.holds() && r.theorem2.holds());
        if r.boundary {
            boundary.push(r.index);
            if !exclusive {
                violations.push(r.index);
            }
        } else if !r.agree {
            violations.push(r.index);
        }
    }
    Ok(VerifyReport {
        config: config.clone(),
        theorem_matrix,
        kappa_vs_numeric,
        violations,
        boundary,
        sections,
    })
}
