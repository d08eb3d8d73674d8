//! Executable pruning criteria for a single section.
//!
//! * Theorem 1: the section has no finite maximizer when the symmetrized
//!   remainder `R1bar(x) = f(x) + f(-x) - 2 f(0)` is negative for all `x > 0`.
//! * Theorem 2: a finite maximizer exists when `f''(0) > 0`.
//! * The kappa rule `|mu| > sqrt(kappa) sigma`, which for `kappa = 1` decides
//!   the Gaussian case exactly.
//! * Lemma 1: `l(gamma) = f(0) + f''(0) / (2 gamma) + o(1/gamma)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::priors::ScaleFamilyPrior;
use crate::quadrature::{default_step, second_derivative_at_zero, QuadratureError, QuadratureSpec};
use crate::section::{
    gaussian_remainder_bracket, section_excess, SectionError, SectionFunction, SectionStats,
};

/// Grid size used when a criterion is evaluated with default settings.
pub const DEFAULT_GRID: usize = 2048;

/// Grid extent in units of the characteristic width of `f`.
pub const GRID_WIDTHS: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("section evaluated to {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Section(#[from] SectionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    Holds,
    Fails,
    Undetermined,
}

impl TriState {
    pub fn holds(self) -> bool {
        self == Self::Holds
    }

    fn from_bool(b: bool) -> Self {
        if b {
            Self::Holds
        } else {
            Self::Fails
        }
    }
}

/// `sqrt(2 / (pi sigma2)) e^{-mu^2 / (2 sigma2)} [e^{-x^2/(2 sigma2)} cosh(mu x / sigma2) - 1]`,
/// the symmetrized remainder of `f = N(x; mu, sigma2)`.
pub fn r1bar_gaussian(stats: &SectionStats, x: f64) -> f64 {
    let (mu, s2) = (stats.mu(), stats.sigma2());
    let log_c = 0.5 * (2.0 / (PI * s2)).ln() - mu * mu / (2.0 * s2);
    let a = x * x / (2.0 * s2);
    let b = (mu * x / s2).abs();
    if b - a < 700.0 {
        log_c.exp() * gaussian_remainder_bracket(mu, s2, x)
    } else {
        // prefactor folded into the exponent so cosh never overflows
        0.5 * ((log_c + b - a).exp() + (log_c - b - a).exp()) - log_c.exp()
    }
}

fn checked_eval(f: &SectionFunction, x: f64) -> Result<f64, CriteriaError> {
    let v = f.eval(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CriteriaError::NonFinite { x, value: v })
    }
}

/// `f(x) + f(-x) - 2 f(0)` from plain evaluations of `f`.
pub fn r1bar_generic(f: &SectionFunction, x: f64) -> Result<f64, CriteriaError> {
    Ok(checked_eval(f, x)? + checked_eval(f, -x)? - 2.0 * checked_eval(f, 0.0)?)
}

/// Sampled remainder of `f` about its tangent at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderProfile {
    pub xs: Vec<f64>,
    pub r1bar_values: Vec<f64>,
    /// `f(0)`.
    pub tangent_intercept: f64,
    /// `f'(0)`.
    pub tangent_slope: f64,
}

impl RemainderProfile {
    pub fn sample(f: &SectionFunction, xs: &[f64]) -> Result<Self, CriteriaError> {
        if let Some(&x) = xs.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(CriteriaError::InvalidArgument(format!(
                "grid point {x} is not positive"
            )));
        }
        let r1bar_values = match f.gaussian_stats() {
            Some(s) => xs.iter().map(|&x| r1bar_gaussian(s, x)).collect(),
            None => xs
                .iter()
                .map(|&x| r1bar_generic(f, x))
                .collect::<Result<_, _>>()?,
        };
        let tangent_intercept = checked_eval(f, 0.0)?;
        let tangent_slope = match f.gaussian_stats() {
            Some(s) => s.mu() / s.sigma2() * tangent_intercept,
            None => {
                let h = default_step(f.width());
                (checked_eval(f, h)? - checked_eval(f, -h)?) / (2.0 * h)
            }
        };
        Ok(Self {
            xs: xs.to_vec(),
            r1bar_values,
            tangent_intercept,
            tangent_slope,
        })
    }

    /// Linear extrapolation of the first two samples to `x = 0`.
    pub fn extrapolated_at_zero(&self) -> Option<f64> {
        match (self.xs.as_slice(), self.r1bar_values.as_slice()) {
            ([x0, x1, ..], [r0, r1, ..]) => Some(r0 - x0 * (r1 - r0) / (x1 - x0)),
            _ => None,
        }
    }
}

/// `n` log-spaced points on `(x_max 1e-6, x_max]`.
pub fn remainder_grid(x_max: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| x_max * 10f64.powf(-6.0 * (1.0 - k as f64 / n as f64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Outcome {
    pub verdict: TriState,
    /// Grid point with the largest remainder (lowest index on ties).
    pub worst_x: f64,
    pub worst_value: f64,
    pub grid_size: usize,
}

/// Theorem 1 (prune when `R1bar(x) < 0` for every `x > 0`).
///
/// Gaussian sections are decided analytically (holds iff `mu^2 <= sigma2`);
/// others by scanning the remainder on [`remainder_grid`] against a threshold
/// of `1e-12 max(|f(0)|, 1)`. A grid that is neither clearly negative nor
/// shows a clear positive value is `Undetermined`. `worst_x` always comes
/// from the grid.
pub fn theorem1_check(
    f: &SectionFunction,
    x_max: f64,
    n_grid: usize,
) -> Result<Theorem1Outcome, CriteriaError> {
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(CriteriaError::InvalidArgument(format!(
            "x_max must be positive, got {x_max}"
        )));
    }
    if n_grid < 64 {
        return Err(CriteriaError::InvalidArgument(format!(
            "n_grid must be at least 64, got {n_grid}"
        )));
    }
    let profile = RemainderProfile::sample(f, &remainder_grid(x_max, n_grid))?;
    let (worst_idx, worst_value) = profile.r1bar_values.iter().copied().enumerate().fold(
        (0usize, f64::NEG_INFINITY),
        |best, (k, v)| if v > best.1 { (k, v) } else { best },
    );
    let verdict = match f.gaussian_stats() {
        Some(s) => TriState::from_bool(s.mu() * s.mu() <= s.sigma2()),
        None => {
            let threshold = 1e-12 * profile.tangent_intercept.abs().max(1.0);
            if worst_value > threshold {
                TriState::Fails
            } else if worst_value < -threshold {
                TriState::Holds
            } else {
                TriState::Undetermined
            }
        }
    };
    Ok(Theorem1Outcome {
        verdict,
        worst_x: profile.xs[worst_idx],
        worst_value,
        grid_size: n_grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Outcome {
    pub verdict: TriState,
    /// `f''(0)`.
    pub f2_estimate: f64,
    /// Error indicator of `f2_estimate`; zero for the closed form.
    pub f2_error: f64,
}

/// `f''(0)` in closed form for Gaussian sections, by finite differences otherwise.
pub fn curvature_at_zero(f: &SectionFunction) -> Result<(f64, f64), CriteriaError> {
    if let Some(s) = f.gaussian_stats() {
        let scale = f.value_at_zero() / s.value_at_zero();
        return Ok((s.curvature_at_zero() * scale, 0.0));
    }
    let reference = f.reference_value();
    let d = second_derivative_at_zero(|x| f.eval_normalized(x), default_step(f.width()))?;
    Ok((d.value * reference, d.error * reference))
}

/// Theorem 2 (finite maximizer when `f''(0) > 0`).
///
/// The finite-difference estimate decides only when it exceeds ten times its
/// error indicator in magnitude.
pub fn theorem2_check(f: &SectionFunction) -> Result<Theorem2Outcome, CriteriaError> {
    let (f2, err) = curvature_at_zero(f)?;
    let verdict = match f.gaussian_stats() {
        Some(s) => TriState::from_bool(s.mu() * s.mu() > s.sigma2()),
        None if f2 > 10.0 * err => TriState::Holds,
        None if f2 < -10.0 * err => TriState::Fails,
        None => TriState::Undetermined,
    };
    Ok(Theorem2Outcome {
        verdict,
        f2_estimate: f2,
        f2_error: err,
    })
}

/// `|mu| > sqrt(kappa) sigma`: the section keeps a finite precision.
pub fn kappa_pruning_rule(stats: &SectionStats, kappa: f64) -> bool {
    stats.mu().abs() > kappa.sqrt() * stats.sigma()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictDetails {
    pub worst_x: f64,
    pub worst_r1bar: f64,
    pub f2_estimate: f64,
    pub f2_error: f64,
    pub grid_size: usize,
}

/// All criteria for one section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub theorem1_prune: TriState,
    pub theorem2_finite: TriState,
    /// Only defined for Gaussian sections.
    pub kappa_rule_finite: Option<bool>,
    pub details: VerdictDetails,
}

impl CriterionVerdict {
    /// Runs both theorems on the default grid (`10` widths, [`DEFAULT_GRID`] points)
    /// and, for Gaussian sections, the kappa rule.
    pub fn evaluate(f: &SectionFunction, kappa: f64) -> Result<Self, CriteriaError> {
        let t1 = theorem1_check(f, GRID_WIDTHS * f.width(), DEFAULT_GRID)?;
        let t2 = theorem2_check(f)?;
        Ok(Self {
            theorem1_prune: t1.verdict,
            theorem2_finite: t2.verdict,
            kappa_rule_finite: f.gaussian_stats().map(|s| kappa_pruning_rule(s, kappa)),
            details: VerdictDetails {
                worst_x: t1.worst_x,
                worst_r1bar: t1.worst_value,
                f2_estimate: t2.f2_estimate,
                f2_error: t2.f2_error,
                grid_size: t1.grid_size,
            },
        })
    }

    /// The two theorems never both hold.
    pub fn is_consistent(&self) -> bool {
        !(self.theorem1_prune.holds() && self.theorem2_finite.holds())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    /// Median of `(l(gamma) - f(0)) gamma` over the top decade of the grid.
    pub fitted_coeff: f64,
    /// `f''(0) / 2`.
    pub reference: f64,
    pub rel_error: f64,
    /// The reference curvature is not distinguishable from zero.
    pub degenerate: bool,
    pub gammas: Vec<f64>,
    pub scaled_excess: Vec<f64>,
}

/// Checks `(l(gamma) - f(0)) gamma -> f''(0) / 2` on `gamma_grid`.
///
/// The grid must start at `1e3` or above and span at least three decades.
pub fn lemma1_rate_check(
    f: &SectionFunction,
    prior: &ScaleFamilyPrior,
    gamma_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<Lemma1Report, CriteriaError> {
    let lo = gamma_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gamma_grid.iter().copied().fold(0.0f64, f64::max);
    if gamma_grid.is_empty() || !(lo >= 1e3) || !hi.is_finite() || hi < 1e3 * lo * (1.0 - 1e-12) {
        return Err(CriteriaError::InvalidArgument(format!(
            "gamma grid must lie above 1e3 and span three decades, got [{lo}, {hi}]"
        )));
    }
    let reference_value = f.reference_value();
    let scaled_excess = gamma_grid
        .iter()
        .map(|&g| Ok(section_excess(f, prior, g, spec)?.value * reference_value * g))
        .collect::<Result<Vec<f64>, CriteriaError>>()?;
    let mut top: Vec<f64> = gamma_grid
        .iter()
        .zip(&scaled_excess)
        .filter(|(&g, _)| g >= hi / 10.0 * (1.0 - 1e-12))
        .map(|(_, &v)| v)
        .collect();
    top.sort_by(f64::total_cmp);
    let fitted_coeff = match top.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => top[n / 2],
        n => 0.5 * (top[n / 2 - 1] + top[n / 2]),
    };
    let (f2, f2_err) = curvature_at_zero(f)?;
    let reference = 0.5 * f2;
    let degenerate = f2.abs() <= 10.0 * f2_err.max(1e-12 * reference_value);
    let rel_error = if reference != 0.0 {
        ((fitted_coeff - reference) / reference).abs()
    } else {
        f64::INFINITY
    };
    Ok(Lemma1Report {
        fitted_coeff,
        reference,
        rel_error,
        degenerate,
        gammas: gamma_grid.to_vec(),
        scaled_excess,
    })
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
                .collect()
        }
    }
}
