//! Intervention-selection policies: P_DC maximization, expected information
//! gain maximization, and uniform random choice.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::HypothesisPosterior;
use crate::error::{Error, Result};
use crate::fitting::FittedModels;
use crate::optimize::{self, Bounds};
use crate::pdc::{self, FrozenNoise, PdcConfig, SampledBayesFactors};
use crate::scm::Dataset;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "pdc")]
    PdcMax,
    #[serde(rename = "infogain")]
    InfoGain,
    #[serde(rename = "random")]
    Random,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::PdcMax, StrategyKind::InfoGain, StrategyKind::Random];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::PdcMax => "pdc",
            StrategyKind::InfoGain => "infogain",
            StrategyKind::Random => "random",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pdc" => Ok(StrategyKind::PdcMax),
            "infogain" => Ok(StrategyKind::InfoGain),
            "random" => Ok(StrategyKind::Random),
            other => Err(Error::ConfigInvalid(format!(
                "unknown strategy `{other}` (expected pdc, infogain or random)"
            ))),
        }
    }
}

pub fn select_random<R: Rng + ?Sized>(bounds: Bounds, rng: &mut R) -> f64 {
    rng.random_range(bounds.lo..=bounds.hi)
}

/// Expected information gain about the hypothesis from one more point at x,
/// up to a term that does not depend on x:
///
/// ```text
/// p₀·E_{y~m̂₀}[log(BF′ / (BF′p₀ + p₁))] + p₁·E_{y~m̂₁(·|x)}[log(1 / (BF′p₀ + p₁))]
/// ```
///
/// with BF′ = BF₀₁(D_int ∪ {(x, y)}) and (p₀, p₁) the current posterior.
pub struct InfoGainSurface<'a> {
    samples: SampledBayesFactors<'a>,
    p0: f64,
    p1: f64,
    // log p₁ − log p₀
    prior_logit_h1: f64,
}

impl<'a> InfoGainSurface<'a> {
    pub fn new(
        models: &'a FittedModels,
        d_int: &Dataset,
        posterior: HypothesisPosterior,
        noise: &'a FrozenNoise,
    ) -> Self {
        let (p0, p1) = (posterior.p_h0(), posterior.p_h1());
        let prior_logit_h1 = match (p0 == 0.0, p1 == 0.0) {
            (true, _) => f64::INFINITY,
            (_, true) => f64::NEG_INFINITY,
            _ => p1.ln() - p0.ln(),
        };
        Self {
            samples: SampledBayesFactors::new(models, d_int, noise),
            p0,
            p1,
            prior_logit_h1,
        }
    }

    /// −log(p₀ + p₁/BF′) = log(BF′ / (BF′p₀ + p₁)).
    fn log_share_h0(&self, lbf: f64) -> f64 {
        if self.p0 == 0.0 {
            return lbf;
        }
        let s = self.p0 + self.p1 * (-lbf).exp();
        if s.is_finite() && s > 0.0 {
            -s.ln()
        } else {
            -stats::log_add_exp(self.p0.ln(), self.p1.ln() - lbf)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.value_and_grad(x).0
    }

    pub fn value_and_grad(&self, x: f64) -> (f64, f64) {
        let (mut v0, mut g0) = (0.0, 0.0);
        if self.p0 > 0.0 {
            self.samples.for_each_h0(x, |lbf, dlbf| {
                // d/dlbf of log_share_h0 is the updated P(H₁ | D′).
                let w1 = stats::sigmoid(self.prior_logit_h1 - lbf);
                v0 += self.log_share_h0(lbf);
                g0 += w1 * dlbf;
            });
        }
        let (mut v1, mut g1) = (0.0, 0.0);
        if self.p1 > 0.0 {
            self.samples.for_each_h1(x, |lbf, dlbf| {
                let w1 = stats::sigmoid(self.prior_logit_h1 - lbf);
                v1 += self.log_share_h0(lbf) - lbf;
                g1 += (w1 - 1.0) * dlbf;
            });
        }
        let (n0, n1) = (self.samples.n0() as f64, self.samples.n1() as f64);
        (
            self.p0 * v0 / n0 + self.p1 * v1 / n1,
            self.p0 * g0 / n0 + self.p1 * g1 / n1,
        )
    }
}

pub fn estimate_info_gain(
    x: f64,
    models: &FittedModels,
    d_int: &Dataset,
    posterior: HypothesisPosterior,
    noise: &FrozenNoise,
) -> f64 {
    InfoGainSurface::new(models, d_int, posterior, noise).value(x)
}

pub fn info_gain_gradient(
    x: f64,
    models: &FittedModels,
    d_int: &Dataset,
    posterior: HypothesisPosterior,
    noise: &FrozenNoise,
) -> f64 {
    InfoGainSurface::new(models, d_int, posterior, noise).value_and_grad(x).1
}

/// Maximizes the information-gain estimate with the same multi-start search
/// and frozen-noise scheme as [`pdc::optimize_intervention`].
pub fn optimize_info_gain<R: Rng + ?Sized>(
    models: &FittedModels,
    d_int: &Dataset,
    posterior: HypothesisPosterior,
    cfg: &PdcConfig,
    bounds: Bounds,
    rng: &mut R,
) -> (f64, f64) {
    let noise = FrozenNoise::draw(models, cfg.n_mc, rng);
    let surface = InfoGainSurface::new(models, d_int, posterior, &noise);
    optimize::maximize(|x| surface.value_and_grad(x), bounds, cfg.ascent())
}

pub fn select_intervention<R: Rng + ?Sized>(
    kind: StrategyKind,
    models: &FittedModels,
    d_int: &Dataset,
    posterior: HypothesisPosterior,
    cfg: &PdcConfig,
    bounds: Bounds,
    rng: &mut R,
) -> f64 {
    match kind {
        StrategyKind::PdcMax => pdc::optimize_intervention(models, d_int, posterior, cfg, bounds, rng).0,
        StrategyKind::InfoGain => optimize_info_gain(models, d_int, posterior, cfg, bounds, rng).0,
        StrategyKind::Random => select_random(bounds, rng),
    }
}
