//! Synthetic angular spectra: Gaussian mixtures on `(-pi/2, pi/2)` sampled on
//! a midpoint grid.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const MAX_COMPONENTS: usize = 5;
pub const SIGMA_MIN: f64 = PI / 90.0;
pub const SIGMA_MAX: f64 = PI / 45.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl MixtureSpec {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.weights.len();
        if !(1..=MAX_COMPONENTS).contains(&l) || self.means.len() != l || self.stddevs.len() != l {
            return Err(Error::InvalidMixture(format!(
                "need 1..={MAX_COMPONENTS} components with matching lengths, got {} weights, {} means, {} stddevs",
                l,
                self.means.len(),
                self.stddevs.len()
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidMixture("weights must be finite and nonnegative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}, not 1")));
        }
        if self.means.iter().any(|m| !m.is_finite()) || self.stddevs.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidMixture(
                "means must be finite and stddevs positive".into(),
            ));
        }
        Ok(())
    }

    /// `f(theta) = sum_k alpha_k N(theta; mean_k, sigma_k)`.
    pub fn density(&self, theta: f64) -> f64 {
        let norm = (2.0 * PI).sqrt();
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((a, m), s)| {
                let z = (theta - m) / s;
                a * (-0.5 * z * z).exp() / (norm * s)
            })
            .sum()
    }
}

/// Grid point `j` of `dim` midpoints covering `(-pi/2, pi/2)`.
pub fn grid_angle(j: usize, dim: usize) -> f64 {
    -FRAC_PI_2 + (j as f64 + 0.5) * PI / dim as f64
}

pub fn sample_spectrum(spec: &MixtureSpec, dim: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if dim < 2 {
        return Err(Error::InvalidMixture(format!(
            "spectrum needs at least 2 samples, got {dim}"
        )));
    }
    Ok((0..dim).map(|j| spec.density(grid_angle(j, dim))).collect())
}

/// Component count uniform on `1..=5`, means uniform on `[-pi/2, pi/2]`,
/// stddevs uniform on `[pi/90, pi/45]`, weights uniform on `[0, 1]` and then
/// normalized.
pub fn random_mixture_with<R: Rng + ?Sized>(r: &mut R) -> MixtureSpec {
    let l = r.gen_range(1..=MAX_COMPONENTS);
    let means = (0..l).map(|_| r.gen_range(-FRAC_PI_2..=FRAC_PI_2)).collect();
    let stddevs = (0..l).map(|_| r.gen_range(SIGMA_MIN..=SIGMA_MAX)).collect();
    let mut weights: Vec<f64> = (0..l).map(|_| r.gen::<f64>()).collect();
    while weights.iter().sum::<f64>() <= f64::MIN_POSITIVE {
        weights.iter_mut().for_each(|w| *w = r.gen());
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    MixtureSpec {
        weights,
        means,
        stddevs,
    }
}

pub fn random_mixture(seed: u64) -> MixtureSpec {
    random_mixture_with(&mut rng::seeded(seed))
}

pub const DATASET_FORMAT: &str = "pfnet-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub format: String,
    pub version: u32,
    /// Seed the samples were generated from; sample `i` uses stream `i`.
    pub seed: u64,
    pub dim: usize,
    pub samples: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn generate(seed: u64, dim: usize, count: usize) -> Result<Self> {
        let samples = (0..count)
            .into_par_iter()
            .map(|i| sample_spectrum(&random_mixture_with(&mut rng::stream(seed, i as u64)), dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            seed,
            dim,
            samples,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let d: Dataset = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if d.format != DATASET_FORMAT || d.version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "expected {DATASET_FORMAT} v{DATASET_VERSION}, found {} v{}",
                d.format, d.version
            )));
        }
        if let Some(bad) = d.samples.iter().position(|s| s.len() != d.dim) {
            return Err(Error::Format(format!("sample {bad} does not have {} entries", d.dim)));
        }
        Ok(d)
    }
}
