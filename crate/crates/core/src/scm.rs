//! Ground-truth bivariate environments.
//!
//! Three structural causal models over (X, Y), all with tanh links and
//! mixture-of-normals noise:
//!
//! | scenario        | equations                                   | truth |
//! |-----------------|---------------------------------------------|-------|
//! | `CauseToEffect` | X = n_X, Y = f(X) + n_Y                      | H₁    |
//! | `EffectToCause` | Y = n_Y, X = f(Y) + n_X                      | H₀    |
//! | `Confounded`    | U = n_U, Y = f(U) + n_Y, X = g(U) + n_X      | H₀    |
//!
//! An intervention do(X = x) replaces X's equation by the constant x; only
//! under `CauseToEffect` does that reach Y.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{MixtureOfNormals, VARIANCE_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// X → Y.
    #[serde(rename = "x_to_y")]
    CauseToEffect,
    /// X ← Y.
    #[serde(rename = "y_to_x")]
    EffectToCause,
    /// X ← U → Y with U unobserved.
    #[serde(rename = "confounder")]
    Confounded,
}

/// Which hypothesis holds about p(y | do(X = x)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// p(y | do(x)) = p(y)
    H0,
    /// p(y | do(x)) = p(y | x)
    H1,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::EffectToCause,
        Scenario::Confounded,
        Scenario::CauseToEffect,
    ];

    pub fn truth(self) -> Hypothesis {
        match self {
            Scenario::CauseToEffect => Hypothesis::H1,
            Scenario::EffectToCause | Scenario::Confounded => Hypothesis::H0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::CauseToEffect => "x_to_y",
            Scenario::EffectToCause => "y_to_x",
            Scenario::Confounded => "confounder",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x_to_y" => Ok(Scenario::CauseToEffect),
            "y_to_x" => Ok(Scenario::EffectToCause),
            "confounder" => Ok(Scenario::Confounded),
            other => Err(Error::ConfigInvalid(format!(
                "unknown scenario `{other}` (expected x_to_y, y_to_x or confounder)"
            ))),
        }
    }
}

/// Link u ↦ A·tanh(B·u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TanhLink {
    pub a: f64,
    pub b: f64,
}

impl TanhLink {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn eval(&self, u: f64) -> f64 {
        tanh_link(u, self.a, self.b)
    }

    /// d/du A·tanh(B·u) = A·B·sech²(B·u).
    pub fn derivative(&self, u: f64) -> f64 {
        let t = (self.b * u).tanh();
        self.a * self.b * (1.0 - t * t)
    }
}

impl Default for TanhLink {
    fn default() -> Self {
        Self { a: 2.0, b: 1.0 }
    }
}

pub fn tanh_link(u: f64, a: f64, b: f64) -> f64 {
    a * (b * u).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseMode {
    /// Component positions and variances fixed, weights random.
    #[serde(rename = "fixed")]
    FixedPositions,
    /// Means ~ U[−4, 4], variances ~ χ²(3), weights random.
    #[serde(rename = "random")]
    FullyRandom,
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(NoiseMode::FixedPositions),
            "random" => Ok(NoiseMode::FullyRandom),
            other => Err(Error::ConfigInvalid(format!(
                "unknown noise mode `{other}` (expected fixed or random)"
            ))),
        }
    }
}

impl NoiseMode {
    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::FixedPositions => "fixed",
            NoiseMode::FullyRandom => "random",
        }
    }
}

/// Fixed component layout: means evenly spaced on [−2, 2] (so k = 3 gives
/// −2, 0, 2) with unit variances.
pub fn fixed_positions(k: usize) -> (Vec<f64>, Vec<f64>) {
    let means = if k == 1 {
        vec![0.0]
    } else {
        (0..k)
            .map(|i| -2.0 + 4.0 * i as f64 / (k - 1) as f64)
            .collect()
    };
    (means, vec![1.0; k])
}

/// π = 1/(2k)·𝟙 + ½·softmax(z).
pub fn mixture_weights(z: &[f64]) -> Vec<f64> {
    let k = z.len() as f64;
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| 0.5 / k + 0.5 * e / total).collect()
}

/// Draws a random noise distribution with `k` components.
pub fn generate_noise_spec<R: Rng + ?Sized>(
    rng: &mut R,
    mode: NoiseMode,
    k: usize,
) -> Result<MixtureOfNormals> {
    if k == 0 {
        return Err(Error::ConfigInvalid("noise needs at least one component".into()));
    }
    let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
    let weights = mixture_weights(&z);
    let (means, variances) = match mode {
        NoiseMode::FixedPositions => fixed_positions(k),
        NoiseMode::FullyRandom => {
            let chi = ChiSquared::new(3.0).expect("3 degrees of freedom is valid");
            let means = (0..k).map(|_| rng.random_range(-4.0..=4.0)).collect();
            let variances = (0..k)
                .map(|_| { let v: f64 = chi.sample(rng); v.max(VARIANCE_FLOOR) })
                .collect();
            (means, variances)
        }
    };
    MixtureOfNormals::new(weights, means, variances)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    /// f, the link into Y (or into X under `EffectToCause`).
    pub link_f: TanhLink,
    /// g, the confounder's link into X. Present only for `Confounded`.
    pub link_g: Option<TanhLink>,
    pub noise_x: MixtureOfNormals,
    pub noise_y: MixtureOfNormals,
    /// Present only for `Confounded`.
    pub noise_u: Option<MixtureOfNormals>,
}

impl ScenarioSpec {
    pub fn new(
        scenario: Scenario,
        link_f: TanhLink,
        link_g: Option<TanhLink>,
        noise_x: MixtureOfNormals,
        noise_y: MixtureOfNormals,
        noise_u: Option<MixtureOfNormals>,
    ) -> Result<Self> {
        let confounded = scenario == Scenario::Confounded;
        if confounded != link_g.is_some() || confounded != noise_u.is_some() {
            return Err(Error::ConfigInvalid(format!(
                "link_g and noise_u must be given exactly when the scenario is confounded ({scenario})"
            )));
        }
        Ok(Self {
            scenario,
            link_f,
            link_g,
            noise_x,
            noise_y,
            noise_u,
        })
    }

    /// Draws the noise distributions for one episode. n_X, n_Y and n_U are
    /// drawn in that order regardless of scenario, so the X and Y noises for a
    /// seed are shared across scenarios.
    pub fn generate<R: Rng + ?Sized>(
        scenario: Scenario,
        link_f: TanhLink,
        link_g: TanhLink,
        mode: NoiseMode,
        k: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let noise_x = generate_noise_spec(rng, mode, k)?;
        let noise_y = generate_noise_spec(rng, mode, k)?;
        let noise_u = generate_noise_spec(rng, mode, k)?;
        let confounded = scenario == Scenario::Confounded;
        Self::new(
            scenario,
            link_f,
            confounded.then_some(link_g),
            noise_x,
            noise_y,
            confounded.then_some(noise_u),
        )
    }

    pub fn sample_observational<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        let pairs = (0..n).map(|_| self.draw_pair(rng)).collect();
        Dataset {
            pairs,
            kind: DataKind::Observational,
        }
    }

    fn draw_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self.scenario {
            Scenario::CauseToEffect => {
                let x = self.noise_x.sample_one(rng);
                let y = self.link_f.eval(x) + self.noise_y.sample_one(rng);
                (x, y)
            }
            Scenario::EffectToCause => {
                let y = self.noise_y.sample_one(rng);
                let x = self.link_f.eval(y) + self.noise_x.sample_one(rng);
                (x, y)
            }
            Scenario::Confounded => {
                let (g, nu) = self.confounder_parts();
                let u = nu.sample_one(rng);
                let y = self.link_f.eval(u) + self.noise_y.sample_one(rng);
                let x = g.eval(u) + self.noise_x.sample_one(rng);
                (x, y)
            }
        }
    }

    /// Response y under do(X = x).
    pub fn sample_interventional<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        match self.scenario {
            Scenario::CauseToEffect => self.link_f.eval(x) + self.noise_y.sample_one(rng),
            Scenario::EffectToCause => self.noise_y.sample_one(rng),
            Scenario::Confounded => {
                let (_, nu) = self.confounder_parts();
                let u = nu.sample_one(rng);
                self.link_f.eval(u) + self.noise_y.sample_one(rng)
            }
        }
    }

    fn confounder_parts(&self) -> (&TanhLink, &MixtureOfNormals) {
        // Guaranteed by the constructor.
        (
            self.link_g.as_ref().expect("confounded spec has link_g"),
            self.noise_u.as_ref().expect("confounded spec has noise_u"),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataKind {
    Observational,
    Interventional,
}

/// (x, y) pairs. For interventional data x is the value set by do(X = x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub pairs: Vec<(f64, f64)>,
    pub kind: DataKind,
}

impl Dataset {
    pub fn empty(kind: DataKind) -> Self {
        Self {
            pairs: Vec::new(),
            kind,
        }
    }

    pub fn interventional(pairs: Vec<(f64, f64)>) -> Self {
        Self {
            pairs,
            kind: DataKind::Interventional,
        }
    }

    pub fn observational(pairs: Vec<(f64, f64)>) -> Self {
        Self {
            pairs,
            kind: DataKind::Observational,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.pairs.push((x, y));
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats;

    fn unit_normal() -> MixtureOfNormals {
        MixtureOfNormals::normal(0.0, 1.0).unwrap()
    }

    fn spec(scenario: Scenario, a: f64) -> ScenarioSpec {
        let confounded = scenario == Scenario::Confounded;
        ScenarioSpec::new(
            scenario,
            TanhLink::new(a, 1.0),
            confounded.then_some(TanhLink::default()),
            unit_normal(),
            unit_normal(),
            confounded.then(unit_normal),
        )
        .unwrap()
    }

    #[test]
    fn tanh_link_values() {
        assert_eq!(tanh_link(0.0, 2.0, 1.0), 0.0);
        assert_eq!(tanh_link(50.0, 2.0, 1.0), 2.0);
        // 2·tanh(1) = 1.5231883119...
        assert!((tanh_link(1.0, 2.0, 1.0) - 1.523_188_311_9).abs() < 1e-9);
        let l = TanhLink::new(1.7, 0.6);
        let h = 1e-6;
        let fd = (l.eval(0.4 + h) - l.eval(0.4 - h)) / (2.0 * h);
        assert!((l.derivative(0.4) - fd).abs() < 1e-8);
    }

    #[test]
    fn symmetric_softmax_gives_equal_weights() {
        let w = mixture_weights(&[0.0, 0.0, 0.0]);
        for v in w {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_bounded_below() {
        let mut rng = seeded(1);
        for k in 1..6 {
            for _ in 0..200 {
                let m = generate_noise_spec(&mut rng, NoiseMode::FixedPositions, k).unwrap();
                assert!(m.weights().iter().all(|w| *w >= 1.0 / (2.0 * k as f64) - 1e-15));
                assert_eq!(m.k(), k);
            }
        }
        assert!(generate_noise_spec(&mut rng, NoiseMode::FixedPositions, 0).is_err());
    }

    #[test]
    fn fixed_layout_defaults() {
        let m = generate_noise_spec(&mut seeded(4), NoiseMode::FixedPositions, 3).unwrap();
        assert_eq!(m.means(), &[-2.0, 0.0, 2.0]);
        assert_eq!(m.variances(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn fully_random_moments() {
        let mut rng = seeded(2);
        let mut means = Vec::new();
        let mut vars = Vec::new();
        for _ in 0..10_000 {
            let m = generate_noise_spec(&mut rng, NoiseMode::FullyRandom, 1).unwrap();
            means.push(m.means()[0]);
            vars.push(m.variances()[0]);
        }
        assert!(stats::mean(&means).abs() < 0.1);
        assert!((stats::mean(&vars) - 3.0).abs() < 0.15);
        assert!(means.iter().all(|m| (-4.0..=4.0).contains(m)));
    }

    #[test]
    fn spec_requires_confounder_parts_exactly_when_confounded() {
        let n = unit_normal;
        assert!(ScenarioSpec::new(Scenario::Confounded, TanhLink::default(), None, n(), n(), Some(n())).is_err());
        assert!(ScenarioSpec::new(
            Scenario::CauseToEffect,
            TanhLink::default(),
            Some(TanhLink::default()),
            n(),
            n(),
            None
        )
        .is_err());
    }

    #[test]
    fn empty_observational() {
        let d = spec(Scenario::CauseToEffect, 2.0).sample_observational(0, &mut seeded(0));
        assert!(d.is_empty());
        assert_eq!(d.kind, DataKind::Observational);
    }

    #[test]
    fn zero_link_severs_dependence() {
        let d = spec(Scenario::CauseToEffect, 0.0).sample_observational(100_000, &mut seeded(9));
        let xs: Vec<f64> = d.xs().collect();
        let ys: Vec<f64> = d.ys().collect();
        let (mx, my) = (stats::mean(&xs), stats::mean(&ys));
        let cov = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.len() as f64;
        let corr = cov / (stats::variance(&xs) * stats::variance(&ys)).sqrt();
        assert!(corr.abs() < 0.01, "corr = {corr}");
    }

    #[test]
    fn regression_on_tanh_recovers_slope() {
        let d = spec(Scenario::CauseToEffect, 2.0).sample_observational(100_000, &mut seeded(10));
        let t: Vec<f64> = d.xs().map(f64::tanh).collect();
        let ys: Vec<f64> = d.ys().collect();
        let (mt, my) = (stats::mean(&t), stats::mean(&ys));
        let sxy: f64 = t.iter().zip(&ys).map(|(a, b)| (a - mt) * (b - my)).sum();
        let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
        assert!((sxy / sxx - 2.0).abs() < 0.1);
    }

    #[test]
    fn interventional_means_under_h1() {
        let s = spec(Scenario::CauseToEffect, 2.0);
        let mut rng = seeded(5);
        let at0: Vec<f64> = (0..100_000).map(|_| s.sample_interventional(0.0, &mut rng)).collect();
        assert!(stats::mean(&at0).abs() < 0.02);
        let at5: Vec<f64> = (0..100_000).map(|_| s.sample_interventional(5.0, &mut rng)).collect();
        // 2·tanh(5) = 1.99981...
        assert!((stats::mean(&at5) - 1.999_818).abs() < 0.02);
    }

    #[test]
    fn interventions_do_not_reach_y_under_h0() {
        for scenario in [Scenario::EffectToCause, Scenario::Confounded] {
            let s = spec(scenario, 2.0);
            let mut rng = seeded(6);
            let lo: Vec<f64> = (0..100_000).map(|_| s.sample_interventional(-5.0, &mut rng)).collect();
            let hi: Vec<f64> = (0..100_000).map(|_| s.sample_interventional(5.0, &mut rng)).collect();
            let d = stats::ks_two_sample(&lo, &hi);
            assert!(d < stats::ks_two_sample_critical(lo.len(), hi.len(), 0.01), "{scenario}: D = {d}");
        }
    }

    #[test]
    fn h1_interventional_matches_observational_conditional() {
        // Under X → Y, p(y | do(x)) = p(y | x): compare interventional draws at
        // x ≈ 1 with observational y whose x landed near 1.
        let s = spec(Scenario::CauseToEffect, 2.0);
        let obs = s.sample_observational(400_000, &mut seeded(7));
        let cond: Vec<f64> = obs
            .pairs
            .iter()
            .filter(|(x, _)| (x - 1.0).abs() < 0.01)
            .map(|(x, y)| y - s.link_f.eval(*x) + s.link_f.eval(1.0))
            .collect();
        let mut rng = seeded(8);
        let int: Vec<f64> = (0..20_000).map(|_| s.sample_interventional(1.0, &mut rng)).collect();
        let d = stats::ks_two_sample(&cond, &int);
        assert!(d < stats::ks_two_sample_critical(cond.len(), int.len(), 0.01));
    }

    #[test]
    fn h1_interventional_mean_tracks_link_on_grid() {
        let s = spec(Scenario::CauseToEffect, 2.0);
        let mut rng = seeded(13);
        for i in 0..=10 {
            let x = -5.0 + i as f64;
            let ys: Vec<f64> = (0..20_000).map(|_| s.sample_interventional(x, &mut rng)).collect();
            // 4 standard errors of a unit-variance mean.
            assert!((stats::mean(&ys) - s.link_f.eval(x)).abs() < 4.0 / (20_000f64).sqrt());
        }
    }
}
