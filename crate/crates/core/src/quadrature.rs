//! One-dimensional integration against scale-family priors and
//! finite-difference curvature at the origin.
//!
//! Expectations are computed in the standardized variable `u = sqrt(gamma) x`,
//! folded onto `u >= 0` using the evenness of the prior. The window is
//! `[0, truncation_sigmas]` for the Gaussian, the support for the uniform, and
//! the whole half-line for heavy-tailed families, whose tail `[T, inf)` is
//! mapped onto a finite interval through `u = T / t`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::priors::{PriorError, ScaleFamilyPrior};

/// Smallest `t` in the mapped tail, i.e. the tail is integrated up to `u = T / TAIL_T_MIN`.
const TAIL_T_MIN: f64 = 1e-12;
/// Equal-width panels laid over each segment before adaptive refinement starts.
const INITIAL_PANELS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge: estimate {estimate:e} with error bound {error_bound:e} after {subdivisions} panels")]
    NoConvergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },
    #[error("integrand returned {value} at x = {x:e}")]
    NonFinite { x: f64, value: f64 },
    #[error("invalid quadrature settings: {0}")]
    InvalidSpec(String),
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Prior(#[from] PriorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Half-width of the integration window in standard deviations of `p(.; gamma)`.
    pub truncation_sigmas: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 4096,
            truncation_sigmas: 12.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(QuadratureError::InvalidSpec(format!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.truncation_sigmas >= 8.0) || !self.truncation_sigmas.is_finite() {
            return Err(QuadratureError::InvalidSpec(format!(
                "truncation_sigmas must be >= 8, got {}",
                self.truncation_sigmas
            )));
        }
        if self.max_subdivisions < 2 * INITIAL_PANELS {
            return Err(QuadratureError::InvalidSpec(format!(
                "max_subdivisions too small: {}",
                self.max_subdivisions
            )));
        }
        Ok(())
    }

    /// Same settings with the relative tolerance divided by `factor`, floored at 1e-14.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: (self.rel_tol / factor).max(1e-14),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Sum of the per-panel error estimates.
    pub error: f64,
    pub subdivisions: usize,
}

/// Kronrod abscissae on `[-1, 1]` (non-negative half, descending); the odd
/// entries are the 7-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    value: f64,
    error: f64,
    /// Part of `error` attributable to round-off; splitting cannot reduce it.
    roundoff: f64,
}

struct Ranked {
    error: f64,
    index: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// 15-point Kronrod estimate on `[a, b]` with the usual error heuristic
/// built from the embedded 7-point Gauss rule. An endpoint value (`fa`, `fb`)
/// well above every interior sample marks a feature the rule cannot see, and
/// the panel is then charged its full endpoint mass as error.
fn make_panel<F>(h: &F, a: f64, b: f64, fa: f64, fb: f64) -> Result<Panel, QuadratureError>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [0.0; 15];
    fv[7] = h(center)?;
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = h(center - dx)?;
        fv[14 - j] = h(center + dx)?;
    }
    let mut kronrod = WGK[7] * fv[7];
    let mut gauss = WG[3] * fv[7];
    let mut abs_sum = WGK[7] * fv[7].abs();
    for j in 0..7 {
        let pair = fv[j] + fv[14 - j];
        kronrod += WGK[j] * pair;
        abs_sum += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let mean = 0.5 * kronrod;
    let mut spread = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        spread += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let (value, abs_sum, spread) = (kronrod * half, abs_sum * half.abs(), spread * half.abs());
    let mut error = ((kronrod - gauss) * half).abs();
    if spread != 0.0 && error != 0.0 {
        error = spread * (200.0 * error / spread).powf(1.5).min(1.0);
    }
    let interior_max = fv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = fa.abs().max(fb.abs());
    if edge > 2.0 * interior_max {
        error = error.max(edge * (b - a).abs());
    }
    let roundoff = 50.0 * f64::EPSILON * abs_sum;
    Ok(Panel {
        a,
        b,
        fa,
        fb,
        value,
        error: error.max(roundoff),
        roundoff,
    })
}

/// Globally adaptive Gauss-Kronrod integration over `cuts[0]..cuts[last]`,
/// with the interior cuts used as forced panel boundaries. The panel with the
/// largest error estimate is bisected until the summed estimate meets
/// `max(abs_tol, rel_tol * |I|)`, or until what remains is round-off.
fn adaptive_gauss_kronrod<F>(
    h: F,
    cuts: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate, QuadratureError>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    let mut panels: Vec<Panel> = Vec::with_capacity(spec.max_subdivisions.min(1 << 14));
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if !(hi > lo) {
            continue;
        }
        let step = (hi - lo) / INITIAL_PANELS as f64;
        let mut fa = h(lo)?;
        for k in 0..INITIAL_PANELS {
            let a = lo + step * k as f64;
            let b = if k + 1 == INITIAL_PANELS {
                hi
            } else {
                lo + step * (k + 1) as f64
            };
            let fb = h(b)?;
            panels.push(make_panel(&h, a, b, fa, fb)?);
            fa = fb;
        }
    }

    let mut heap: BinaryHeap<Ranked> = panels
        .iter()
        .enumerate()
        .map(|(index, p)| Ranked {
            error: p.error,
            index,
        })
        .collect();
    let sums = |panels: &[Panel]| {
        panels.iter().fold((0.0, 0.0, 0.0), |(v, e, r), p| {
            (v + p.value, e + p.error, r + p.roundoff)
        })
    };
    let (mut total, mut total_err, mut total_roundoff) = sums(&panels);
    let mut splits = 0usize;

    loop {
        let target = spec
            .abs_tol
            .max(spec.rel_tol * total.abs())
            .max(total_roundoff);
        if total_err <= target {
            break;
        }
        let no_room = panels.len() >= spec.max_subdivisions;
        let worst = match heap.pop() {
            Some(r) if !no_room => r,
            _ => {
                return Err(QuadratureError::NoConvergence {
                    estimate: total,
                    error_bound: total_err,
                    subdivisions: panels.len(),
                })
            }
        };
        let p = panels[worst.index];
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            return Err(QuadratureError::NoConvergence {
                estimate: total,
                error_bound: total_err,
                subdivisions: panels.len(),
            });
        }
        let fm = h(m)?;
        let left = make_panel(&h, p.a, m, p.fa, fm)?;
        let right = make_panel(&h, m, p.b, fm, p.fb)?;
        total += left.value + right.value - p.value;
        total_err += left.error + right.error - p.error;
        total_roundoff += left.roundoff + right.roundoff - p.roundoff;
        panels[worst.index] = left;
        heap.push(Ranked {
            error: left.error,
            index: worst.index,
        });
        panels.push(right);
        heap.push(Ranked {
            error: right.error,
            index: panels.len() - 1,
        });

        splits += 1;
        if splits.is_multiple_of(512) {
            // running sums drift; resync them
            (total, total_err, total_roundoff) = sums(&panels);
        }
    }

    let (value, error, _) = sums(&panels);
    Ok(Estimate {
        value,
        error,
        subdivisions: panels.len(),
    })
}

fn checked<G: Fn(f64) -> f64>(g: &G, x: f64) -> Result<f64, QuadratureError> {
    let v = g(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadratureError::NonFinite { x, value: v })
    }
}

/// Adaptive Gauss-Kronrod estimate of `int_a^b g(x) dx`, with `breakpoints` forced
/// as panel boundaries.
pub fn integrate<G>(
    g: G,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate, QuadratureError>
where
    G: Fn(f64) -> f64,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadratureError::InvalidSpec(format!(
            "non-finite bounds [{a}, {b}]"
        )));
    }
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo, hi];
    cuts.extend(breakpoints.iter().copied().filter(|&c| c > lo && c < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let est = adaptive_gauss_kronrod(|x| checked(&g, x), &cuts, spec)?;
    Ok(Estimate {
        value: sign * est.value,
        ..est
    })
}

/// `int_0^inf h(x) p(x; gamma) dx`.
///
/// `hints` are locations in `x` where `h` has structure (peaks, kinks, scale
/// changes); their magnitudes become panel boundaries so narrow features are
/// not stepped over.
pub fn half_line_expect<H>(
    h: H,
    prior: &ScaleFamilyPrior,
    gamma: f64,
    spec: &QuadratureSpec,
    hints: &[f64],
) -> Result<Estimate, QuadratureError>
where
    H: Fn(f64) -> Result<f64, QuadratureError>,
{
    spec.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(PriorError::NonPositiveGamma(gamma).into());
    }
    let root = gamma.sqrt();
    let core_end = prior.support_half_width().unwrap_or(spec.truncation_sigmas);
    let mapped_tail = prior.has_heavy_tails();
    let z_end = if mapped_tail {
        core_end + 1.0 - TAIL_T_MIN
    } else {
        core_end
    };

    // z in [0, core_end] is u itself; z in (core_end, z_end] is the tail with
    // t = core_end + 1 - z and u = core_end / t.
    let integrand = |z: f64| -> Result<f64, QuadratureError> {
        if z <= core_end {
            let u = z;
            let dens = prior.standard_density(u);
            if dens == 0.0 {
                return Ok(0.0);
            }
            Ok(h(u / root)? * dens)
        } else {
            let t = core_end + 1.0 - z;
            let u = core_end / t;
            let dens = prior.standard_density(u);
            if dens == 0.0 {
                return Ok(0.0);
            }
            Ok(h(u / root)? * dens * core_end / (t * t))
        }
    };

    let mut cuts = vec![0.0, core_end];
    if mapped_tail {
        cuts.push(z_end);
    }
    for &x in hints {
        let u = x.abs() * root;
        if !u.is_finite() || u <= 0.0 {
            continue;
        }
        if u < core_end {
            cuts.push(u);
        } else if mapped_tail {
            let z = core_end + 1.0 - core_end / u;
            if z > core_end && z < z_end {
                cuts.push(z);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    adaptive_gauss_kronrod(integrand, &cuts, spec)
}

/// `int g(x) p(x; gamma) dx` over the window, with feature `hints` (see
/// [`half_line_expect`]).
pub fn expect_with_hints<G>(
    g: G,
    prior: &ScaleFamilyPrior,
    gamma: f64,
    spec: &QuadratureSpec,
    hints: &[f64],
) -> Result<Estimate, QuadratureError>
where
    G: Fn(f64) -> f64,
{
    half_line_expect(
        |x| Ok(checked(&g, x)? + checked(&g, -x)?),
        prior,
        gamma,
        spec,
        hints,
    )
}

/// `int g(x) p(x; gamma) dx`.
pub fn expect<G>(
    g: G,
    prior: &ScaleFamilyPrior,
    gamma: f64,
    spec: &QuadratureSpec,
) -> Result<f64, QuadratureError>
where
    G: Fn(f64) -> f64,
{
    Ok(expect_with_hints(g, prior, gamma, spec, &[])?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    /// Gap between the two Richardson levels plus a round-off floor.
    pub error: f64,
}

/// Default finite-difference step for a function varying on `scale`.
pub fn default_step(scale: f64) -> f64 {
    1e-4 * scale.max(1.0)
}

/// `g''(0)` from central differences at `h`, `2h` and `4h`.
///
/// The estimate is the Richardson combination of the `h` and `2h` stencils;
/// the `2h`/`4h` combination serves as the comparison level for the error
/// indicator.
pub fn second_derivative_at_zero<G>(g: G, step: f64) -> Result<DerivativeEstimate, QuadratureError>
where
    G: Fn(f64) -> f64,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(QuadratureError::InvalidStep(step));
    }
    let g0 = checked(&g, 0.0)?;
    let mut g_max = g0.abs();
    let mut central = |h: f64| -> Result<f64, QuadratureError> {
        let (p, m) = (checked(&g, h)?, checked(&g, -h)?);
        g_max = g_max.max(p.abs()).max(m.abs());
        Ok((p - 2.0 * g0 + m) / (h * h))
    };
    let d1 = central(step)?;
    let d2 = central(2.0 * step)?;
    let d4 = central(4.0 * step)?;
    let fine = (4.0 * d1 - d2) / 3.0;
    let coarse = (4.0 * d2 - d4) / 3.0;
    let roundoff = 32.0 * f64::EPSILON * g_max / (step * step);
    Ok(DerivativeEstimate {
        value: fine,
        error: (fine - coarse).abs() + roundoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn priors() -> Vec<ScaleFamilyPrior> {
        vec![
            ScaleFamilyPrior::gaussian(),
            ScaleFamilyPrior::laplace(),
            ScaleFamilyPrior::uniform(),
            ScaleFamilyPrior::student_t(5.0).unwrap(),
        ]
    }

    fn normal(x: f64, mu: f64, var: f64) -> f64 {
        (-(x - mu).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    #[test]
    fn integrate_polynomial() {
        let spec = QuadratureSpec::default();
        let est = integrate(|x| x * x * x - x, 0.0, 2.0, &[], &spec).unwrap();
        assert_relative_eq!(est.value, 2.0, max_relative = 1e-12);
        let rev = integrate(|x| x * x, 1.0, 0.0, &[0.5], &spec).unwrap();
        assert_relative_eq!(rev.value, -1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn integrate_narrow_peak_with_breakpoint() {
        let spec = QuadratureSpec::default();
        let est = integrate(|x| normal(x, 3.3, 1e-6), -100.0, 100.0, &[3.3], &spec).unwrap();
        assert_relative_eq!(est.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn normalization() {
        let spec = QuadratureSpec::default();
        for p in priors() {
            for &gamma in &[0.1, 1.0, 10.0, 1000.0] {
                let v = expect(|_| 1.0, &p, gamma, &spec).unwrap();
                assert!((v - 1.0).abs() <= 1e-10, "{} gamma {gamma}: {v}", p.name());
            }
        }
    }

    #[test]
    fn variance_contract() {
        let spec = QuadratureSpec::default();
        for p in priors() {
            for &gamma in &[0.1, 1.0, 2.0, 10.0, 1000.0] {
                let v = expect(|x| x * x, &p, gamma, &spec).unwrap();
                assert_relative_eq!(v, 1.0 / gamma, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn fourth_moment_matches_closed_form() {
        let spec = QuadratureSpec::default();
        for p in priors() {
            let v = expect(|x| x.powi(4), &p, 1.0, &spec).unwrap();
            assert_relative_eq!(v, p.fourth_moment(), max_relative = 1e-8);
        }
        let v = expect(|x| x.powi(4), &ScaleFamilyPrior::gaussian(), 1.0, &spec).unwrap();
        assert!((v - 3.0).abs() <= 1e-8);
    }

    #[test]
    fn odd_integrands_vanish() {
        let spec = QuadratureSpec::default();
        for p in priors() {
            let v = expect(|x| x * x * x, &p, 1.7, &spec).unwrap();
            assert!(v.abs() <= spec.abs_tol);
        }
    }

    #[test]
    fn refinement_is_self_consistent() {
        let coarse = QuadratureSpec {
            rel_tol: 1e-8,
            ..Default::default()
        };
        let fine = QuadratureSpec {
            rel_tol: 1e-9,
            ..Default::default()
        };
        let g = |x: f64| normal(x, 1.5, 0.3);
        for p in priors() {
            for &gamma in &[0.05, 1.0, 40.0] {
                let a = expect_with_hints(g, &p, gamma, &coarse, &[1.5])
                    .unwrap()
                    .value;
                let b = expect_with_hints(g, &p, gamma, &fine, &[1.5])
                    .unwrap()
                    .value;
                assert!(
                    (a - b).abs() <= coarse.rel_tol * b.abs(),
                    "{} {gamma}: {a} vs {b}",
                    p.name()
                );
            }
        }
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let spec = QuadratureSpec::default();
        let err = expect(
            |x| if x > 2.0 { f64::NAN } else { 1.0 },
            &ScaleFamilyPrior::gaussian(),
            1.0,
            &spec,
        )
        .unwrap_err();
        match err {
            QuadratureError::NonFinite { x, value } => {
                assert!(x > 2.0);
                assert!(value.is_nan());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn convergence_failure_carries_estimate() {
        let spec = QuadratureSpec {
            max_subdivisions: 16,
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            ..Default::default()
        };
        let err = integrate(|x| (50.0 * x).sin().abs(), 0.0, 10.0, &[], &spec).unwrap_err();
        match err {
            QuadratureError::NoConvergence {
                estimate,
                error_bound,
                subdivisions,
            } => {
                assert!(estimate.is_finite() && error_bound > 0.0);
                assert!(subdivisions >= 16);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_spec_and_gamma() {
        let bad = QuadratureSpec {
            truncation_sigmas: 4.0,
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(QuadratureError::InvalidSpec(_))
        ));
        let bad = QuadratureSpec {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let err = expect(
            |_| 1.0,
            &ScaleFamilyPrior::gaussian(),
            -1.0,
            &QuadratureSpec::default(),
        );
        assert!(matches!(
            err,
            Err(QuadratureError::Prior(PriorError::NonPositiveGamma(_)))
        ));
    }

    #[test]
    fn second_derivative_of_square() {
        let d = second_derivative_at_zero(|x| x * x, 1e-4).unwrap();
        assert!((d.value - 2.0).abs() <= 1e-6);
    }

    #[test]
    fn second_derivative_of_gaussian_sections() {
        // (mu^2 - sigma^2) / sigma^4 * N(0; mu, sigma^2) with mu = 1.5, sigma^2 = 1
        let d = second_derivative_at_zero(|x| normal(x, 1.5, 1.0), 1e-4).unwrap();
        assert!((d.value - 0.161_896_994_582_364_66).abs() <= 1e-6, "{d:?}");
        assert!(d.value > 10.0 * d.error);
        let d = second_derivative_at_zero(|x| normal(x, 0.5, 1.0), 1e-4).unwrap();
        assert!(d.value < -10.0 * d.error, "{d:?}");
    }

    #[test]
    fn second_derivative_degenerate_curvature() {
        let d = second_derivative_at_zero(|x| 1.0 - x.powi(4), 1e-4).unwrap();
        assert!(d.value.abs() <= 10.0 * d.error, "{d:?}");
    }

    #[test]
    fn second_derivative_errors() {
        assert!(matches!(
            second_derivative_at_zero(|x| x, 0.0),
            Err(QuadratureError::InvalidStep(_))
        ));
        assert!(matches!(
            second_derivative_at_zero(|x| 1.0 / x, 1e-3),
            Err(QuadratureError::NonFinite { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn expect_is_linear(
            c in prop::collection::vec(-2.0f64..2.0, 5),
            d in prop::collection::vec(-2.0f64..2.0, 5),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            idx in 0usize..4,
            log_gamma in -1.0f64..2.0,
        ) {
            let spec = QuadratureSpec::default();
            let p = priors()[idx];
            let gamma = 10f64.powf(log_gamma);
            let poly = |coef: &[f64], x: f64| coef.iter().rev().fold(0.0, |acc, &k| acc * x + k);
            let ge = expect(|x| poly(&c, x), &p, gamma, &spec).unwrap();
            let he = expect(|x| poly(&d, x), &p, gamma, &spec).unwrap();
            let both = expect(|x| a * poly(&c, x) + b * poly(&d, x), &p, gamma, &spec).unwrap();
            let scale = (a.abs() * ge.abs() + b.abs() * he.abs()).max(1.0);
            prop_assert!((both - (a * ge + b * he)).abs() <= 1e-9 * scale);
        }
    }
}
