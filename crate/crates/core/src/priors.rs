//! Even scale-family priors `p(x; gamma) = sqrt(gamma) p(sqrt(gamma) x; 1)`.
//!
//! Every family is held in its standardized, unit-variance form. The
//! precision-parameterized density is always derived from it, so the variance
//! contract `E[x^2] = 1/gamma` holds by construction.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("precision must be positive and finite, got {0}")]
    NonPositiveGamma(f64),
    #[error("student-t prior needs dof > 4 for a finite fourth moment, got {0}")]
    InvalidDof(f64),
}

/// Distribution family of a prior, in standardized unit-variance form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    /// Laplace with scale `1/sqrt(2)`.
    Laplace,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
    /// Student-t scaled by `sqrt((dof - 2) / dof)`.
    StudentT {
        dof: f64,
    },
}

/// A validated prior family. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorConfig", into = "PriorConfig")]
pub struct ScaleFamilyPrior {
    family: Family,
}

/// JSON form: `{"family": "student_t", "dof": 5.0}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum PriorConfig {
    Gaussian,
    Laplace,
    Uniform,
    StudentT { dof: f64 },
}

impl TryFrom<PriorConfig> for ScaleFamilyPrior {
    type Error = PriorError;

    fn try_from(cfg: PriorConfig) -> Result<Self, PriorError> {
        Ok(match cfg {
            PriorConfig::Gaussian => Self::gaussian(),
            PriorConfig::Laplace => Self::laplace(),
            PriorConfig::Uniform => Self::uniform(),
            PriorConfig::StudentT { dof } => Self::student_t(dof)?,
        })
    }
}

impl From<ScaleFamilyPrior> for PriorConfig {
    fn from(p: ScaleFamilyPrior) -> Self {
        match p.family {
            Family::Gaussian => PriorConfig::Gaussian,
            Family::Laplace => PriorConfig::Laplace,
            Family::Uniform => PriorConfig::Uniform,
            Family::StudentT { dof } => PriorConfig::StudentT { dof },
        }
    }
}

fn check_gamma(gamma: f64) -> Result<(), PriorError> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(PriorError::NonPositiveGamma(gamma))
    }
}

impl ScaleFamilyPrior {
    pub fn gaussian() -> Self {
        Self {
            family: Family::Gaussian,
        }
    }

    pub fn laplace() -> Self {
        Self {
            family: Family::Laplace,
        }
    }

    pub fn uniform() -> Self {
        Self {
            family: Family::Uniform,
        }
    }

    pub fn student_t(dof: f64) -> Result<Self, PriorError> {
        if dof > 4.0 && dof.is_finite() {
            Ok(Self {
                family: Family::StudentT { dof },
            })
        } else {
            Err(PriorError::InvalidDof(dof))
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Gaussian => "gaussian".into(),
            Family::Laplace => "laplace".into(),
            Family::Uniform => "uniform".into(),
            Family::StudentT { dof } => format!("student_t({dof})"),
        }
    }

    /// Half-width of the standardized support, `None` for unbounded families.
    pub fn support_half_width(&self) -> Option<f64> {
        match self.family {
            Family::Uniform => Some(SQRT_3),
            _ => None,
        }
    }

    /// Whether the tails decay slower than a Gaussian, so that a truncated
    /// integration window leaves non-negligible mass behind.
    pub fn has_heavy_tails(&self) -> bool {
        matches!(self.family, Family::Laplace | Family::StudentT { .. })
    }

    /// Standardized density `p(u; 1)`.
    pub fn standard_density(&self, u: f64) -> f64 {
        match self.family {
            Family::Gaussian => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            Family::Laplace => (-SQRT_2 * u.abs()).exp() / SQRT_2,
            Family::Uniform => {
                if u.abs() <= SQRT_3 {
                    0.5 / SQRT_3
                } else {
                    0.0
                }
            }
            Family::StudentT { dof } => {
                let scale = ((dof - 2.0) / dof).sqrt();
                let t = u / scale;
                let log_norm = ln_gamma(0.5 * (dof + 1.0))
                    - ln_gamma(0.5 * dof)
                    - 0.5 * (dof * PI).ln()
                    - scale.ln();
                (log_norm - 0.5 * (dof + 1.0) * (t * t / dof).ln_1p()).exp()
            }
        }
    }

    /// `p(x; gamma)`.
    pub fn density(&self, x: f64, gamma: f64) -> Result<f64, PriorError> {
        check_gamma(gamma)?;
        let root = gamma.sqrt();
        Ok(root * self.standard_density(root * x))
    }

    /// `E[x^4]` under `p(x; 1)`.
    pub fn fourth_moment(&self) -> f64 {
        match self.family {
            Family::Gaussian => 3.0,
            Family::Laplace => 6.0,
            Family::Uniform => 9.0 / 5.0,
            Family::StudentT { dof } => 3.0 * (dof - 2.0) / (dof - 4.0),
        }
    }

    /// `P(X <= x)` for `X ~ p(.; gamma)`.
    pub fn cdf(&self, x: f64, gamma: f64) -> Result<f64, PriorError> {
        check_gamma(gamma)?;
        let u = gamma.sqrt() * x;
        Ok(match self.family {
            Family::Gaussian => Normal::standard().cdf(u),
            Family::Laplace => {
                let tail = 0.5 * (-SQRT_2 * u.abs()).exp();
                if u < 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            Family::Uniform => ((u + SQRT_3) / (2.0 * SQRT_3)).clamp(0.0, 1.0),
            Family::StudentT { dof } => {
                let scale = ((dof - 2.0) / dof).sqrt();
                StudentsT::new(0.0, scale, dof)
                    .expect("dof validated at construction")
                    .cdf(u)
            }
        })
    }

    /// Probability mass of `p(.; gamma)` inside `(-a, a)`.
    pub fn mass_within(&self, a: f64, gamma: f64) -> Result<f64, PriorError> {
        Ok(self.cdf(a, gamma)? - self.cdf(-a, gamma)?)
    }

    /// `n` deterministic draws from `p(.; gamma)` for the given seed.
    pub fn sample(&self, gamma: f64, n: usize, seed: u64) -> Result<Vec<f64>, PriorError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, gamma, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        gamma: f64,
        n: usize,
    ) -> Result<Vec<f64>, PriorError> {
        check_gamma(gamma)?;
        let sd = gamma.sqrt().recip();
        let draw_standard = |rng: &mut R| -> f64 {
            match self.family {
                Family::Gaussian => rng.sample(StandardNormal),
                Family::Laplace => {
                    // inverse CDF on (-1/2, 1/2)
                    let v: f64 = rng.random::<f64>() - 0.5;
                    -v.signum() * (1.0 - 2.0 * v.abs()).ln() / SQRT_2
                }
                Family::Uniform => SQRT_3 * (2.0 * rng.random::<f64>() - 1.0),
                Family::StudentT { dof } => {
                    let z: f64 = rng.sample(StandardNormal);
                    let chi2 = ChiSquared::new(dof).expect("dof validated at construction");
                    let w = chi2.sample(rng);
                    z / (w / dof).sqrt() * ((dof - 2.0) / dof).sqrt()
                }
            }
        };
        Ok((0..n).map(|_| sd * draw_standard(rng)).collect())
    }
}
