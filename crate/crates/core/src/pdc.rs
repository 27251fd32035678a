//! Probability of decisive and correct evidence (P_DC) for a candidate
//! intervention do(X = x), estimated by Monte Carlo with a smoothed step so
//! that it can be climbed by gradient ascent.
//!
//! For frozen draws y₀ᵢ ~ m̂₀ and residuals εᵢ ~ ψ̂ (so y₁ᵢ = f(x; θ̂) + εᵢ),
//!
//! ```text
//! P_DC(x) ≈ P(H₀|D)·(1/N) Σ exp(−ReLU(k₀ − BF₀₁(D ∪ {(x, y₀ᵢ)}))/β)
//!         + P(H₁|D)·(1/N) Σ exp(−ReLU(BF₀₁(D ∪ {(x, y₁ᵢ)}) − k₁)/β)
//! ```
//!
//! Keeping the draws fixed across x (common random numbers) makes the
//! surrogate a deterministic, differentiable function of x.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{self, HypothesisPosterior, MAX_LOG_BF};
use crate::error::{Error, Result};
use crate::fitting::FittedModels;
use crate::optimize::{self, AscentSettings, Bounds};
use crate::scm::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdcConfig {
    /// BF₀₁ above k0 is decisive for H₀.
    pub k0: f64,
    /// BF₀₁ below k1 is decisive for H₁.
    pub k1: f64,
    pub beta: f64,
    /// Monte Carlo draws per hypothesis.
    pub n_mc: usize,
    /// Multi-start points for the intervention search.
    pub starts: usize,
    /// Ascent steps per start.
    pub max_steps: usize,
}

impl Default for PdcConfig {
    fn default() -> Self {
        Self {
            k0: 10.0,
            k1: 0.1,
            beta: 0.2,
            n_mc: 4096,
            starts: 8,
            max_steps: 200,
        }
    }
}

impl PdcConfig {
    /// Symmetric thresholds k₀ = 1/k₁ = `k0`.
    pub fn symmetric(k0: f64) -> Self {
        Self {
            k0,
            k1: 1.0 / k0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 1.0 && 1.0 > self.k1 && self.k1 > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "thresholds need k0 > 1 > k1 > 0, got k0 = {}, k1 = {}",
                self.k0, self.k1
            )));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::ConfigInvalid(format!("beta must be positive, got {}", self.beta)));
        }
        if self.n_mc == 0 || self.starts == 0 {
            return Err(Error::ConfigInvalid("n_mc and starts must be positive".into()));
        }
        Ok(())
    }

    pub fn ascent(&self) -> AscentSettings {
        AscentSettings {
            starts: self.starts,
            max_steps: self.max_steps,
        }
    }
}

/// exp(−max(0, t)/β).
pub fn smoothed_step(t: f64, beta: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else {
        (-t / beta).exp()
    }
}

/// d/dt of [`smoothed_step`], with the derivative at the kink taken from the
/// satisfied side (zero).
pub fn smoothed_step_grad(t: f64, beta: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-t / beta).exp() / beta
    }
}

/// Monte Carlo draws held fixed while x varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenNoise {
    /// y₀ᵢ ~ m̂₀
    pub y0: Vec<f64>,
    /// εᵢ ~ ψ̂, the fitted residual mixture of m̂₁
    pub eps: Vec<f64>,
}

impl FrozenNoise {
    pub fn draw<R: Rng + ?Sized>(models: &FittedModels, n: usize, rng: &mut R) -> Self {
        let y0 = models.m0.sample(rng, n);
        let eps = models.residual.sample(rng, n);
        Self { y0, eps }
    }
}

/// Per-draw log Bayes factors of D_int ∪ {(x, y)} and their x-derivatives,
/// with everything that does not depend on x computed once.
pub struct SampledBayesFactors<'a> {
    models: &'a FittedModels,
    noise: &'a FrozenNoise,
    base: f64,
    log_m0_y0: Vec<f64>,
    log_psi_eps: Vec<f64>,
}

impl<'a> SampledBayesFactors<'a> {
    pub fn new(models: &'a FittedModels, d_int: &Dataset, noise: &'a FrozenNoise) -> Self {
        Self {
            models,
            noise,
            base: bayes::log_bf01(models, d_int),
            log_m0_y0: noise.y0.iter().map(|y| models.log_m0(*y)).collect(),
            log_psi_eps: noise.eps.iter().map(|e| models.residual.log_density(*e)).collect(),
        }
    }

    /// log BF₀₁ of the accumulated data alone.
    pub fn base(&self) -> f64 {
        self.base
    }

    /// Calls `visit(log_bf, d log_bf / dx)` for every draw under H₀.
    ///
    /// Only m̂₁(y₀ᵢ | x) depends on x: d/dx[−log ψ(y₀ᵢ − f(x))] = score_ψ·f′(x).
    pub fn for_each_h0(&self, x: f64, mut visit: impl FnMut(f64, f64)) {
        let fx = self.models.link.eval(x);
        let dfx = self.models.link.derivative(x);
        for (y, lm0) in self.noise.y0.iter().zip(&self.log_m0_y0) {
            let (lpsi, score) = self.models.residual.log_density_with_grad(y - fx);
            visit(self.base + lm0 - lpsi, score * dfx);
        }
    }

    /// Calls `visit(log_bf, d log_bf / dx)` for every draw under H₁.
    ///
    /// With y₁ᵢ = f(x) + εᵢ, m̂₁(y₁ᵢ | x) = ψ(εᵢ) is constant in x, so only
    /// m̂₀(y₁ᵢ) moves: d/dx log m̂₀(y₁ᵢ) = score_m₀·f′(x).
    pub fn for_each_h1(&self, x: f64, mut visit: impl FnMut(f64, f64)) {
        let fx = self.models.link.eval(x);
        let dfx = self.models.link.derivative(x);
        for (e, lpsi) in self.noise.eps.iter().zip(&self.log_psi_eps) {
            let (lm0, score) = self.models.m0.log_density_with_grad(fx + e);
            visit(self.base + lm0 - lpsi, score * dfx);
        }
    }

    pub fn n0(&self) -> usize {
        self.noise.y0.len()
    }

    pub fn n1(&self) -> usize {
        self.noise.eps.len()
    }
}

/// BF and dBF/d(log BF), clamped like [`bayes::bf_from_log`].
fn bf_and_slope(log_bf: f64) -> (f64, f64) {
    if log_bf.abs() > MAX_LOG_BF {
        (log_bf.clamp(-MAX_LOG_BF, MAX_LOG_BF).exp(), 0.0)
    } else {
        let bf = log_bf.exp();
        (bf, bf)
    }
}

/// The P_DC surrogate for one frozen noise set.
pub struct PdcSurface<'a> {
    samples: SampledBayesFactors<'a>,
    cfg: PdcConfig,
    p0: f64,
    p1: f64,
}

impl<'a> PdcSurface<'a> {
    pub fn new(
        models: &'a FittedModels,
        d_int: &Dataset,
        posterior: HypothesisPosterior,
        cfg: &PdcConfig,
        noise: &'a FrozenNoise,
    ) -> Self {
        Self {
            samples: SampledBayesFactors::new(models, d_int, noise),
            cfg: *cfg,
            p0: posterior.p_h0(),
            p1: posterior.p_h1(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.value_and_grad(x).0
    }

    pub fn value_and_grad(&self, x: f64) -> (f64, f64) {
        let (k0, k1, beta) = (self.cfg.k0, self.cfg.k1, self.cfg.beta);
        let (mut v0, mut g0) = (0.0, 0.0);
        self.samples.for_each_h0(x, |lbf, dlbf| {
            let (bf, slope) = bf_and_slope(lbf);
            let t = k0 - bf;
            v0 += smoothed_step(t, beta);
            g0 += smoothed_step_grad(t, beta) * (-slope * dlbf);
        });
        let (mut v1, mut g1) = (0.0, 0.0);
        self.samples.for_each_h1(x, |lbf, dlbf| {
            let (bf, slope) = bf_and_slope(lbf);
            let t = bf - k1;
            v1 += smoothed_step(t, beta);
            g1 += smoothed_step_grad(t, beta) * (slope * dlbf);
        });
        let (n0, n1) = (self.samples.n0() as f64, self.samples.n1() as f64);
        (
            (self.p0 * v0 / n0 + self.p1 * v1 / n1).clamp(0.0, 1.0),
            self.p0 * g0 / n0 + self.p1 * g1 / n1,
        )
    }

    /// Per-draw hard indicators, H₀ draws first. Between two points with the
    /// same pattern no draw crosses its kink, so the surface is smooth there.
    pub fn decisive_pattern(&self, x: f64) -> Vec<bool> {
        let (lk0, lk1) = (self.cfg.k0.ln(), self.cfg.k1.ln());
        let mut out = Vec::with_capacity(self.samples.n0() + self.samples.n1());
        self.samples.for_each_h0(x, |lbf, _| out.push(lbf > lk0));
        self.samples.for_each_h1(x, |lbf, _| out.push(lbf < lk1));
        out
    }

    /// Same estimator with hard indicators 1{BF > k₀} and 1{BF < k₁}.
    pub fn hard_value(&self, x: f64) -> f64 {
        let (k0, k1) = (self.cfg.k0, self.cfg.k1);
        let (lk0, lk1) = (k0.ln(), k1.ln());
        let mut c0 = 0usize;
        self.samples.for_each_h0(x, |lbf, _| c0 += usize::from(lbf > lk0));
        let mut c1 = 0usize;
        self.samples.for_each_h1(x, |lbf, _| c1 += usize::from(lbf < lk1));
        self.p0 * c0 as f64 / self.samples.n0() as f64 + self.p1 * c1 as f64 / self.samples.n1() as f64
    }
}

/// Monte Carlo P_DC at x on the given frozen draws.
pub fn estimate_pdc(
    x: f64,
    models: &FittedModels,
    d_int: &Dataset,
    posterior: HypothesisPosterior,
    cfg: &PdcConfig,
    noise: &FrozenNoise,
) -> f64 {
    PdcSurface::new(models, d_int, posterior, cfg, noise).value(x)
}

/// d/dx of [`estimate_pdc`] on the same frozen draws.
pub fn pdc_gradient(
    x: f64,
    models: &FittedModels,
    d_int: &Dataset,
    posterior: HypothesisPosterior,
    cfg: &PdcConfig,
    noise: &FrozenNoise,
) -> f64 {
    PdcSurface::new(models, d_int, posterior, cfg, noise).value_and_grad(x).1
}

/// Chooses the intervention maximizing the P_DC surrogate. One noise set is
/// drawn from `rng` and reused for every start and step.
pub fn optimize_intervention<R: Rng + ?Sized>(
    models: &FittedModels,
    d_int: &Dataset,
    posterior: HypothesisPosterior,
    cfg: &PdcConfig,
    bounds: Bounds,
    rng: &mut R,
) -> (f64, f64) {
    let noise = FrozenNoise::draw(models, cfg.n_mc, rng);
    let surface = PdcSurface::new(models, d_int, posterior, cfg, &noise);
    optimize::maximize(|x| surface.value_and_grad(x), bounds, cfg.ascent())
}
