//! Weighted univariate Gaussian mixtures.
//!
//! Every noise model in the simulator and every fitted density is a
//! [`MixtureOfNormals`]. Densities are evaluated in log space with an online
//! log-sum-exp, so evaluation is finite for any finite argument.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Smallest variance any component may have.
pub const VARIANCE_FLOOR: f64 = 1e-4;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRecord", into = "MixtureRecord")]
pub struct MixtureOfNormals {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    // ln wⱼ − ½ ln(2π vⱼ)
    log_coef: Vec<f64>,
    inv_var: Vec<f64>,
}

/// Flat serialized form.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixtureRecord {
    k: usize,
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl TryFrom<MixtureRecord> for MixtureOfNormals {
    type Error = Error;

    fn try_from(r: MixtureRecord) -> Result<Self> {
        if r.k != r.weights.len() {
            return Err(Error::InvalidMixture(format!(
                "k = {} but {} weights given",
                r.k,
                r.weights.len()
            )));
        }
        MixtureOfNormals::new(r.weights, r.means, r.variances)
    }
}

impl From<MixtureOfNormals> for MixtureRecord {
    fn from(m: MixtureOfNormals) -> Self {
        MixtureRecord {
            k: m.k(),
            weights: m.weights,
            means: m.means,
            variances: m.variances,
        }
    }
}

impl MixtureOfNormals {
    /// Builds a mixture. Weights must be nonnegative and sum to one within
    /// 1e-9 (they are renormalized exactly); variances below
    /// [`VARIANCE_FLOOR`] are raised to it.
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::InvalidMixture("need at least one component".into()));
        }
        if means.len() != k || variances.len() != k {
            return Err(Error::InvalidMixture(format!(
                "length mismatch: {} weights, {} means, {} variances",
                k,
                means.len(),
                variances.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMixture("weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidMixture("means must be finite".into()));
        }
        if variances.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidMixture("variances must be finite and > 0".into()));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let variances: Vec<f64> = variances.iter().map(|v| v.max(VARIANCE_FLOOR)).collect();
        let log_coef = weights
            .iter()
            .zip(&variances)
            .map(|(w, v)| w.ln() - HALF_LN_2PI - 0.5 * v.ln())
            .collect();
        let inv_var = variances.iter().map(|v| 1.0 / v).collect();
        Ok(Self {
            weights,
            means,
            variances,
            log_coef,
            inv_var,
        })
    }

    /// Single Gaussian N(mean, variance).
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![variance])
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| w * (v + (m - mu) * (m - mu)))
            .sum()
    }

    /// log Σᵢ πᵢ N(y; μᵢ, σᵢ²).
    pub fn log_density(&self, y: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for j in 0..self.k() {
            let d = y - self.means[j];
            let l = self.log_coef[j] - 0.5 * d * d * self.inv_var[j];
            if l > max {
                sum = sum * (max - l).exp() + 1.0;
                max = l;
            } else {
                sum += (l - max).exp();
            }
        }
        max + sum.ln()
    }

    /// d/dy of [`log_density`](Self::log_density): the responsibility
    /// weighted average of the component scores −(y − μᵢ)/σᵢ².
    pub fn log_density_grad(&self, y: f64) -> f64 {
        self.log_density_with_grad(y).1
    }

    /// Log density and its derivative in one pass.
    pub fn log_density_with_grad(&self, y: f64) -> (f64, f64) {
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut score = 0.0;
        for j in 0..self.k() {
            let d = y - self.means[j];
            let l = self.log_coef[j] - 0.5 * d * d * self.inv_var[j];
            let s = -d * self.inv_var[j];
            if l > max {
                let scale = (max - l).exp();
                sum = sum * scale + 1.0;
                score = score * scale + s;
                max = l;
            } else {
                let e = (l - max).exp();
                sum += e;
                score += e * s;
            }
        }
        (max + sum.ln(), score / sum)
    }

    pub fn density(&self, y: f64) -> f64 {
        self.log_density(y).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| w * 0.5 * erfc(-(y - m) / (2.0 * v).sqrt()))
            .sum()
    }

    /// One draw: pick a component by weight, then a Gaussian draw from it.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut j = self.k() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                j = i;
                break;
            }
        }
        let z: f64 = StandardNormal.sample(rng);
        self.means[j] + self.variances[j].sqrt() * z
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Interval that holds essentially all of the mass: every mean ± 10 sd.
    pub fn support_hint(&self) -> (f64, f64) {
        let sd = self
            .variances
            .iter()
            .copied()
            .fold(0.0f64, f64::max)
            .sqrt();
        let lo = self.means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - 10.0 * sd, hi + 10.0 * sd)
    }
}

/// Density of N(mean, variance) at y; used by tests and oracles that must not
/// go through the mixture code.
pub fn normal_pdf(y: f64, mean: f64, variance: f64) -> f64 {
    (-(y - mean) * (y - mean) / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}
