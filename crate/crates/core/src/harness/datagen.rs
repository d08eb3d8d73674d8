//! Planted sparse regression problems.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::priors::ScaleFamilyPrior;
use crate::section::SparseProblem;

/// Noise precision used for noiseless problems, per unit of signal power per sample.
pub const NOISELESS_PRECISION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    GaussianIid,
    /// `cos(pi (r + 1/2) j / M)`, an `M`-atom cosine frame sampled at `N` points.
    DctOvercomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// `None` for noiseless observations.
    pub snr_db: Option<f64>,
    pub dictionary_kind: DictionaryKind,
    pub weight_prior: ScaleFamilyPrior,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 100,
            m: 256,
            k: 10,
            snr_db: Some(30.0),
            dictionary_kind: DictionaryKind::GaussianIid,
            weight_prior: ScaleFamilyPrior::gaussian(),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n == 0 || self.m == 0 {
            return Err(HarnessError::Spec(format!(
                "n and m must be positive, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        if self.k > self.m {
            return Err(HarnessError::Spec(format!(
                "k = {} exceeds m = {}",
                self.k, self.m
            )));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(HarnessError::Spec(format!(
                    "snr_db must be finite, got {snr}"
                )));
            }
        }
        Ok(())
    }
}

/// Ground truth of a generated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    /// Sorted indices of the nonzero weights.
    pub support: Vec<usize>,
    /// Full length-`m` weight vector.
    pub weights: Vec<f64>,
    pub signal_power: f64,
    pub noise_power: f64,
    /// `10 log10(|Ax|^2 / |v|^2)`; `None` when noiseless or without signal.
    pub realized_snr_db: Option<f64>,
}

fn dictionary(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, m) = (spec.n, spec.m);
    let mut a = match spec.dictionary_kind {
        DictionaryKind::GaussianIid => DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(rng)),
        DictionaryKind::DctOvercomplete => DMatrix::from_fn(n, m, |r, j| {
            (PI * (r as f64 + 0.5) * j as f64 / m as f64).cos()
        }),
    };
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    a
}

/// Draws `(A, x, v)` and returns `y = A x + v` with noise precision `N / |v|^2`.
pub fn generate(spec: &SyntheticSpec) -> Result<(SparseProblem, Planted), HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = dictionary(spec, &mut rng);
    let mut support = sample(&mut rng, spec.m, spec.k).into_vec();
    support.sort_unstable();
    let values = spec.weight_prior.sample_with(&mut rng, 1.0, spec.k)?;
    let mut weights = vec![0.0; spec.m];
    for (&j, &w) in support.iter().zip(&values) {
        weights[j] = w;
    }
    let x = DVector::from_column_slice(&weights);
    let signal = &a * &x;
    let signal_power = signal.norm_squared();
    let n = spec.n as f64;

    let (y, noise_precision, noise_power, realized) = match spec.snr_db {
        None => {
            let per_sample = if signal_power > 0.0 {
                signal_power / n
            } else {
                1.0
            };
            (signal, NOISELESS_PRECISION / per_sample, 0.0, None)
        }
        Some(snr) => {
            let raw = DVector::from_fn(spec.n, |_, _| StandardNormal.sample(&mut rng));
            let raw_power: f64 = raw.norm_squared();
            let target = if signal_power > 0.0 {
                signal_power / 10f64.powf(snr / 10.0)
            } else {
                n
            };
            let v = raw * (target / raw_power).sqrt();
            let noise_power = v.norm_squared();
            let realized =
                (signal_power > 0.0).then(|| 10.0 * (signal_power / noise_power).log10());
            (signal + v, n / noise_power, noise_power, realized)
        }
    };
    let problem = SparseProblem::new(a, y, noise_precision)?;
    Ok((
        problem,
        Planted {
            support,
            weights,
            signal_power,
            noise_power,
            realized_snr_db: realized,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_norm_columns() {
        for kind in [DictionaryKind::GaussianIid, DictionaryKind::DctOvercomplete] {
            let spec = SyntheticSpec {
                n: 20,
                m: 50,
                k: 3,
                dictionary_kind: kind,
                ..Default::default()
            };
            let (p, planted) = generate(&spec).unwrap();
            for col in p.dictionary().column_iter() {
                assert!((col.norm() - 1.0).abs() < 1e-12);
            }
            assert_eq!(planted.support.len(), 3);
            assert!(planted.support.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_snr() {
        let (_, planted) = generate(&SyntheticSpec::default()).unwrap();
        assert!((planted.realized_snr_db.unwrap() - 30.0).abs() < 0.01);
        assert!((planted.realized_snr_db.unwrap() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let spec = SyntheticSpec {
            snr_db: None,
            n: 10,
            m: 12,
            k: 2,
            ..Default::default()
        };
        let (p, planted) = generate(&spec).unwrap();
        let x = DVector::from_column_slice(&planted.weights);
        assert_eq!(p.observation(), &(p.dictionary() * x));
        assert_eq!(planted.noise_power, 0.0);
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec {
            seed: 42,
            ..Default::default()
        };
        let (p1, t1) = generate(&spec).unwrap();
        let (p2, t2) = generate(&spec).unwrap();
        assert_eq!(p1.dictionary(), p2.dictionary());
        assert_eq!(p1.observation(), p2.observation());
        assert_eq!(p1.noise_precision(), p2.noise_precision());
        assert_eq!(t1, t2);
        let (p3, _) = generate(&SyntheticSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(p1.observation(), p3.observation());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&SyntheticSpec {
            k: 300,
            ..Default::default()
        })
        .is_err());
        assert!(generate(&SyntheticSpec {
            n: 0,
            ..Default::default()
        })
        .is_err());
        assert!(generate(&SyntheticSpec {
            snr_db: Some(f64::NAN),
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = SyntheticSpec {
            weight_prior: ScaleFamilyPrior::student_t(5.0).unwrap(),
            ..Default::default()
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: SyntheticSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
