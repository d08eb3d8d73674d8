//! Plot data for a Gaussian section, its tangent at the origin and the prior.

use std::f64::consts::PI;

use super::HarnessError;
use crate::criteria::r1bar_gaussian;
use crate::priors::ScaleFamilyPrior;
use crate::section::SectionStats;

pub const FIGURE_X_MIN: f64 = -4.0;
pub const FIGURE_X_MAX: f64 = 4.0;
pub const FIGURE_POINTS: usize = 801;

/// Half-width of the interval `[-1/2, 1/2]` on which the prior mass is measured.
pub const MASS_HALF_WIDTH: f64 = 0.5;
pub const MASS_FRACTION: f64 = 0.99;

/// The two sections shown by default: `(mu, sigma2) = (1.5, 1)` and `(0.5, 1)`.
pub const DEFAULT_CASES: [(f64, f64); 2] = [(1.5, 1.0), (0.5, 1.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

pub fn figure_grid() -> Vec<f64> {
    let span = FIGURE_X_MAX - FIGURE_X_MIN;
    (0..FIGURE_POINTS)
        .map(|k| FIGURE_X_MIN + span * k as f64 / (FIGURE_POINTS - 1) as f64)
        .collect()
}

fn density(x: f64, mu: f64, s2: f64) -> f64 {
    (-(x - mu) * (x - mu) / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt()
}

/// Columns `x, f, t, r1, r1bar` with `f = N(x; mu, sigma2)`, its tangent
/// `t` at 0, `r1 = f - t` and `r1bar(x) = f(x) + f(-x) - 2 f(0)`.
pub fn figure1(mu: f64, sigma2: f64) -> Result<Table, HarnessError> {
    let stats = SectionStats::new(0, mu, sigma2)?;
    let f0 = stats.value_at_zero();
    let slope = mu / sigma2 * f0;
    let rows = figure_grid()
        .into_iter()
        .map(|x| {
            let f = density(x, mu, sigma2);
            let t = f0 + slope * x;
            let r1bar = if x == 0.0 {
                0.0
            } else {
                r1bar_gaussian(&stats, x.abs())
            };
            vec![x, f, t, f - t, r1bar]
        })
        .collect();
    Ok(Table {
        header: vec!["x", "f", "t", "r1", "r1bar"],
        rows,
    })
}

/// Smallest precision putting `mass` of the prior inside `[-half_width, half_width]`.
pub fn gamma_for_mass(
    prior: &ScaleFamilyPrior,
    half_width: f64,
    mass: f64,
) -> Result<f64, HarnessError> {
    if !(half_width > 0.0 && mass > 0.0 && mass < 1.0) {
        return Err(HarnessError::Spec(format!(
            "need half_width > 0 and 0 < mass < 1, got {half_width}, {mass}"
        )));
    }
    // mass_within is increasing in gamma; bisect on log gamma
    let (mut lo, mut hi) = (-20.0f64, 20.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prior.mass_within(half_width, mid.exp())? >= mass {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// `(gamma_1, 4 gamma_1)` with `gamma_1` from [`gamma_for_mass`] on `[-1/2, 1/2]`.
pub fn default_figure2_gammas(prior: &ScaleFamilyPrior) -> Result<(f64, f64), HarnessError> {
    let g1 = gamma_for_mass(prior, MASS_HALF_WIDTH, MASS_FRACTION)?;
    Ok((g1, 4.0 * g1))
}

/// Columns `x, f, t, p1, p2` with the prior densities at the two precisions.
pub fn figure2(
    mu: f64,
    sigma2: f64,
    gammas: (f64, f64),
    prior: &ScaleFamilyPrior,
) -> Result<Table, HarnessError> {
    let (g1, g2) = gammas;
    if !(g1 > 0.0 && g1 < g2 && g2.is_finite()) {
        return Err(HarnessError::Spec(format!(
            "need 0 < gamma_1 < gamma_2, got {g1}, {g2}"
        )));
    }
    let stats = SectionStats::new(0, mu, sigma2)?;
    let f0 = stats.value_at_zero();
    let slope = mu / sigma2 * f0;
    let rows = figure_grid()
        .into_iter()
        .map(|x| {
            Ok(vec![
                x,
                density(x, mu, sigma2),
                f0 + slope * x,
                prior.density(x, g1)?,
                prior.density(x, g2)?,
            ])
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(Table {
        header: vec!["x", "f", "t", "p1", "p2"],
        rows,
    })
}

/// Trapezoid rule over a sampled column.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_gamma_matches_normal_quantile() {
        let (g1, g2) = default_figure2_gammas(&ScaleFamilyPrior::gaussian()).unwrap();
        assert_relative_eq!(g1, 26.539_586_404_084_86, max_relative = 1e-10);
        assert_relative_eq!(g2, 4.0 * g1);
        assert!(ScaleFamilyPrior::gaussian().mass_within(0.5, g1).unwrap() >= 0.99 - 1e-12);
    }

    #[test]
    fn figure1_tangency() {
        for (mu, s2) in DEFAULT_CASES {
            let t = figure1(mu, s2).unwrap();
            assert_eq!(t.rows.len(), FIGURE_POINTS);
            let mid = &t.rows[400];
            assert_eq!(mid[0], 0.0);
            assert_eq!(mid[1], mid[2]);
            assert_eq!(mid[3], 0.0);
            assert_eq!(mid[4], 0.0);
        }
    }

    #[test]
    fn figure1_convexity_on_inner_interval() {
        for (mu, s2, sign) in [(1.5, 1.0, 1.0), (0.5, 1.0, -1.0)] {
            let t = figure1(mu, s2).unwrap();
            let xs = t.column("x").unwrap();
            let f = t.column("f").unwrap();
            let r1 = t.column("r1").unwrap();
            for k in 1..xs.len() - 1 {
                if xs[k].abs() < 0.5 - 1e-9 {
                    let second = f[k + 1] - 2.0 * f[k] + f[k - 1];
                    assert!(sign * second > 0.0, "x = {}", xs[k]);
                    assert!(sign * r1[k] >= -1e-15);
                }
            }
        }
    }

    #[test]
    fn figure2_prior_columns() {
        let prior = ScaleFamilyPrior::gaussian();
        let gammas = default_figure2_gammas(&prior).unwrap();
        let t = figure2(1.5, 1.0, gammas, &prior).unwrap();
        let xs = t.column("x").unwrap();
        let p1 = t.column("p1").unwrap();
        let p2 = t.column("p2").unwrap();
        assert!((trapezoid(&xs, &p1) - 1.0).abs() < 1e-6);
        assert!((trapezoid(&xs, &p2) - 1.0).abs() < 1e-6);
        assert_relative_eq!(p2[400] / p1[400], 2.0, max_relative = 1e-12);
        assert!(figure2(1.5, 1.0, (2.0, 1.0), &prior).is_err());
    }

    #[test]
    fn gamma_for_mass_other_priors() {
        for prior in [
            ScaleFamilyPrior::laplace(),
            ScaleFamilyPrior::student_t(5.0).unwrap(),
        ] {
            let g = gamma_for_mass(&prior, 0.5, 0.99).unwrap();
            assert!((prior.mass_within(0.5, g).unwrap() - 0.99).abs() < 1e-9);
        }
    }
}
