//! Maximum-likelihood estimation of the two candidate interventional
//! densities from observational data.
//!
//! * m₀(y): a Gaussian mixture for the marginal of Y.
//! * m₁(y | x) = ψ(y − A·tanh(B·x)): a tanh regression with mixture
//!   residuals ψ.
//!
//! Both fits use full-batch Adam on unconstrained parameters (softmax logits
//! for weights, log of the variance excess over the floor), with every
//! accepted step required to not decrease the log-likelihood. Data are
//! standardized before fitting and the estimates mapped back afterwards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{MixtureOfNormals, VARIANCE_FLOOR};
use crate::scm::{Dataset, TanhLink};
use crate::stats;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Mixture components in both m₀ and the m₁ residual.
    pub components: usize,
    pub restarts: usize,
    /// Stop once the log-likelihood gains less than `tolerance · n` over
    /// `patience` iterations.
    pub tolerance: f64,
    pub patience: usize,
    pub max_iterations: usize,
    pub learning_rate: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            components: 3,
            restarts: 4,
            tolerance: 1e-7,
            patience: 20,
            max_iterations: 2000,
            learning_rate: 0.05,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::ConfigInvalid("fit needs at least one component".into()));
        }
        if self.restarts == 0 {
            return Err(Error::ConfigInvalid("fit needs at least one restart".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.tolerance >= 0.0) {
            return Err(Error::ConfigInvalid("learning rate and tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn min_points(&self) -> usize {
        10 * self.components
    }
}

/// Outcome of one fit (best restart), with the objective trace of every
/// restart kept for auditing monotonicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub m0: FitReport,
    pub m1: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M0Fit {
    pub mixture: MixtureOfNormals,
    pub report: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M1Fit {
    pub link: TanhLink,
    pub residual: MixtureOfNormals,
    pub report: FitReport,
}

/// Estimated interventional densities under each hypothesis. Frozen for the
/// whole episode once fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub m0: MixtureOfNormals,
    pub link: TanhLink,
    pub residual: MixtureOfNormals,
    pub diagnostics: Option<FitDiagnostics>,
}

impl FittedModels {
    /// Models assembled from known parameters (no fitting involved).
    pub fn from_parts(m0: MixtureOfNormals, link: TanhLink, residual: MixtureOfNormals) -> Self {
        Self {
            m0,
            link,
            residual,
            diagnostics: None,
        }
    }

    pub fn log_m0(&self, y: f64) -> f64 {
        self.m0.log_density(y)
    }

    pub fn log_m1(&self, y: f64, x: f64) -> f64 {
        self.residual.log_density(y - self.link.eval(x))
    }
}

/// Fits both m̂₀ and m̂₁ on the same observational sample.
pub fn fit_models<R: Rng + ?Sized>(obs: &Dataset, cfg: &FitConfig, rng: &mut R) -> Result<FittedModels> {
    let m0 = fit_m0(obs, cfg, rng)?;
    let m1 = fit_m1(obs, cfg, rng)?;
    Ok(FittedModels {
        m0: m0.mixture,
        link: m1.link,
        residual: m1.residual,
        diagnostics: Some(FitDiagnostics {
            m0: m0.report,
            m1: m1.report,
        }),
    })
}

pub fn fit_m0<R: Rng + ?Sized>(obs: &Dataset, cfg: &FitConfig, rng: &mut R) -> Result<M0Fit> {
    cfg.validate()?;
    check_size(obs, cfg)?;
    let ys: Vec<f64> = obs.ys().collect();
    let (my, sy) = location_scale(&ys).ok_or(Error::DegenerateData("all y values are identical"))?;
    let z: Vec<f64> = ys.iter().map(|y| (y - my) / sy).collect();
    let k = cfg.components;
    let n = z.len() as f64;

    let mut sorted = z.clone();
    sorted.sort_by(f64::total_cmp);

    let mut best: Option<(Ascent, usize)> = None;
    let mut traces = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let levels = quantile_levels(k, r, rng);
        let init = MixtureLayout::initial(k, &sorted, &levels);
        let mut buf = Workspace::new(k);
        let mut objective = |p: &[f64], g: &mut [f64]| {
            let mut acc = MixtureAccumulator::new(k, p, &mut buf);
            g.iter_mut().for_each(|v| *v = 0.0);
            let mut total = 0.0;
            for &e in &z {
                let (lp, _) = acc.add_point(e, g);
                total += lp;
            }
            total
        };
        let run = ascend(&mut objective, init, cfg, n, "fitting m0")?;
        traces.push(run.trace.clone());
        if best.as_ref().is_none_or(|(b, _)| run.value > b.value) {
            best = Some((run, r));
        }
    }
    let (run, _) = best.expect("at least one restart");
    let mixture = MixtureLayout::decode(k, &run.params).to_mixture(my, sy)?;
    Ok(M0Fit {
        mixture,
        report: FitReport {
            log_likelihood: run.value - n * sy.ln(),
            iterations: run.iterations,
            converged: run.converged,
            traces,
        },
    })
}

pub fn fit_m1<R: Rng + ?Sized>(obs: &Dataset, cfg: &FitConfig, rng: &mut R) -> Result<M1Fit> {
    cfg.validate()?;
    check_size(obs, cfg)?;
    let xs: Vec<f64> = obs.xs().collect();
    let ys: Vec<f64> = obs.ys().collect();
    if xs.iter().all(|x| *x == xs[0]) {
        return Err(Error::DegenerateData("all x values are identical"));
    }
    let (my, sy) = location_scale(&ys).ok_or(Error::DegenerateData("all y values are identical"))?;
    // x is only rescaled: the link is odd about the origin.
    let sx = (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt();
    let xz: Vec<f64> = xs.iter().map(|x| x / sx).collect();
    let yz: Vec<f64> = ys.iter().map(|y| (y - my) / sy).collect();
    let k = cfg.components;
    let n = yz.len() as f64;

    let grid = coarse_link_grid(&xz, &yz);
    let mut best: Option<Ascent> = None;
    let mut traces = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let (a0, b0) = match r {
            // B = 1 in data units.
            0 => {
                let b = sx;
                (least_squares_amplitude(&xz, &yz, b).0, b)
            }
            1 => (grid[0].1, grid[0].0),
            _ => {
                let pick = &grid[rng.random_range(0..grid.len())];
                (pick.1, pick.0)
            }
        };
        let mut residuals: Vec<f64> = xz
            .iter()
            .zip(&yz)
            .map(|(x, y)| y - a0 * (b0 * x).tanh())
            .collect();
        residuals.sort_by(f64::total_cmp);
        let levels = quantile_levels(k, r, rng);
        let mut init = vec![a0, b0];
        init.extend(MixtureLayout::initial(k, &residuals, &levels));

        let mut buf = Workspace::new(k);
        let mut objective = |p: &[f64], g: &mut [f64]| {
            let (a, b) = (p[0], p[1]);
            let (link_grad, mix_grad) = g.split_at_mut(2);
            link_grad[0] = 0.0;
            link_grad[1] = 0.0;
            mix_grad.iter_mut().for_each(|v| *v = 0.0);
            let mut acc = MixtureAccumulator::new(k, &p[2..], &mut buf);
            let mut total = 0.0;
            for (&x, &y) in xz.iter().zip(&yz) {
                let t = (b * x).tanh();
                let e = y - a * t;
                let (lp, score) = acc.add_point(e, mix_grad);
                total += lp;
                // de/dA = −t, de/dB = −A·x·sech²(Bx)
                link_grad[0] -= score * t;
                link_grad[1] -= score * a * x * (1.0 - t * t);
            }
            total
        };
        let run = ascend(&mut objective, init, cfg, n, "fitting m1")?;
        traces.push(run.trace.clone());
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    let (mut a, mut b) = (run.params[0] * sy, run.params[1] / sx);
    // A·tanh(Bx) = (−A)·tanh(−Bx); report the B ≥ 0 representative.
    if b < 0.0 {
        a = -a;
        b = -b;
    }
    let residual = MixtureLayout::decode(k, &run.params[2..]).to_mixture(my, sy)?;
    Ok(M1Fit {
        link: TanhLink::new(a, b),
        residual,
        report: FitReport {
            log_likelihood: run.value - n * sy.ln(),
            iterations: run.iterations,
            converged: run.converged,
            traces,
        },
    })
}

fn check_size(obs: &Dataset, cfg: &FitConfig) -> Result<()> {
    if obs.len() < cfg.min_points() {
        return Err(Error::InsufficientData {
            got: obs.len(),
            need: cfg.min_points(),
        });
    }
    Ok(())
}

fn location_scale(v: &[f64]) -> Option<(f64, f64)> {
    if v.iter().all(|y| *y == v[0]) {
        return None;
    }
    let m = stats::mean(v);
    let s = stats::std_dev(v);
    (s > 0.0 && s.is_finite()).then_some((m, s))
}

/// Quantile levels for initial component means: evenly spaced for the first
/// restart, random afterwards.
fn quantile_levels<R: Rng + ?Sized>(k: usize, restart: usize, rng: &mut R) -> Vec<f64> {
    if restart == 0 {
        return (0..k).map(|j| (j as f64 + 0.5) / k as f64).collect();
    }
    let mut l: Vec<f64> = (0..k).map(|_| rng.random_range(0.02..0.98)).collect();
    l.sort_by(f64::total_cmp);
    l
}

/// (B, A) pairs ranked by squared error; A is the least-squares amplitude
/// for each B on a coarse grid.
fn coarse_link_grid(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, f64)> = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&b| {
            let (a, sse) = least_squares_amplitude(x, y, b);
            (b, a, sse)
        })
        .collect();
    out.sort_by(|p, q| p.2.total_cmp(&q.2));
    out.into_iter().map(|(b, a, _)| (b, a)).collect()
}

/// Least-squares fit of y ≈ c + A·tanh(Bx) for fixed B; returns (A, SSE).
fn least_squares_amplitude(x: &[f64], y: &[f64], b: f64) -> (f64, f64) {
    let t: Vec<f64> = x.iter().map(|v| (b * v).tanh()).collect();
    let (mt, my) = (stats::mean(&t), stats::mean(y));
    let sxy: f64 = t.iter().zip(y).map(|(a, c)| (a - mt) * (c - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sse = t
        .iter()
        .zip(y)
        .map(|(ti, yi)| {
            let r = yi - my - a * (ti - mt);
            r * r
        })
        .sum();
    (a, sse)
}

/// Unconstrained mixture parameters: `[logits; means; log(v − floor)]`.
struct MixtureLayout {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl MixtureLayout {
    fn initial(k: usize, sorted: &[f64], levels: &[f64]) -> Vec<f64> {
        let n = sorted.len();
        let var = (stats::variance(sorted) / k as f64).max(2.0 * VARIANCE_FLOOR);
        let mut p = vec![0.0; 3 * k];
        for (j, level) in levels.iter().enumerate() {
            let idx = ((level * n as f64) as usize).min(n - 1);
            p[k + j] = sorted[idx];
            p[2 * k + j] = (var - VARIANCE_FLOOR).ln();
        }
        p
    }

    fn decode(k: usize, p: &[f64]) -> Self {
        let logits = &p[..k];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        Self {
            weights: exps.iter().map(|e| e / total).collect(),
            means: p[k..2 * k].to_vec(),
            variances: p[2 * k..3 * k].iter().map(|s| VARIANCE_FLOOR + s.exp()).collect(),
        }
    }

    /// Maps a mixture on standardized data back to data units.
    fn to_mixture(&self, loc: f64, scale: f64) -> Result<MixtureOfNormals> {
        MixtureOfNormals::new(
            self.weights.clone(),
            self.means.iter().map(|m| loc + scale * m).collect(),
            self.variances.iter().map(|v| v * scale * scale).collect(),
        )
    }
}

struct Workspace {
    terms: Vec<f64>,
}

impl Workspace {
    fn new(k: usize) -> Self {
        Self { terms: vec![0.0; k] }
    }
}

/// Accumulates log-likelihood gradients of a mixture over data points.
struct MixtureAccumulator<'a> {
    k: usize,
    weights: Vec<f64>,
    log_coef: Vec<f64>,
    means: Vec<f64>,
    inv_var: Vec<f64>,
    // dv/ds = v − floor
    dvar: Vec<f64>,
    buf: &'a mut Workspace,
}

impl<'a> MixtureAccumulator<'a> {
    fn new(k: usize, p: &[f64], buf: &'a mut Workspace) -> Self {
        let layout = MixtureLayout::decode(k, p);
        let log_coef = layout
            .weights
            .iter()
            .zip(&layout.variances)
            .map(|(w, v)| w.ln() - HALF_LN_2PI - 0.5 * v.ln())
            .collect();
        Self {
            k,
            log_coef,
            inv_var: layout.variances.iter().map(|v| 1.0 / v).collect(),
            dvar: layout.variances.iter().map(|v| v - VARIANCE_FLOOR).collect(),
            means: layout.means,
            weights: layout.weights,
            buf,
        }
    }

    /// Adds one point's gradient into `g` (mixture layout) and returns
    /// (log p(e), d log p / de).
    fn add_point(&mut self, e: f64, g: &mut [f64]) -> (f64, f64) {
        let k = self.k;
        let terms = &mut self.buf.terms;
        let mut max = f64::NEG_INFINITY;
        for j in 0..k {
            let d = e - self.means[j];
            terms[j] = self.log_coef[j] - 0.5 * d * d * self.inv_var[j];
            max = max.max(terms[j]);
        }
        let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        let lp = max + sum.ln();
        let mut score = 0.0;
        for j in 0..k {
            let r = (terms[j] - lp).exp();
            let d = e - self.means[j];
            let iv = self.inv_var[j];
            g[j] += r - self.weights[j];
            g[k + j] += r * d * iv;
            g[2 * k + j] += r * 0.5 * (d * d * iv * iv - iv) * self.dvar[j];
            score -= r * d * iv;
        }
        (lp, score)
    }
}

struct Ascent {
    params: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Adam ascent where a step is taken only if it does not lower the
/// objective; otherwise the step size is halved and the step retried.
fn ascend(
    f: &mut impl FnMut(&[f64], &mut [f64]) -> f64,
    init: Vec<f64>,
    cfg: &FitConfig,
    n: f64,
    stage: &'static str,
) -> Result<Ascent> {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    const MAX_HALVINGS: usize = 30;

    let dim = init.len();
    let mut x = init;
    let mut g = vec![0.0; dim];
    let mut value = f(&x, &mut g);
    if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(stage));
    }
    let mut m1 = vec![0.0; dim];
    let mut m2 = vec![0.0; dim];
    let mut lr = cfg.learning_rate;
    let mut trace = vec![value];
    let mut cand = vec![0.0; dim];
    let mut cand_g = vec![0.0; dim];
    let mut dir = vec![0.0; dim];
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=cfg.max_iterations {
        iterations = t;
        let bc1 = 1.0 - BETA1.powi(t as i32);
        let bc2 = 1.0 - BETA2.powi(t as i32);
        for i in 0..dim {
            // Scale by n so the moments see the per-point gradient.
            let gi = g[i] / n;
            m1[i] = BETA1 * m1[i] + (1.0 - BETA1) * gi;
            m2[i] = BETA2 * m2[i] + (1.0 - BETA2) * gi * gi;
            dir[i] = (m1[i] / bc1) / ((m2[i] / bc2).sqrt() + EPS);
        }
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            for i in 0..dim {
                cand[i] = x[i] + lr * dir[i];
            }
            let v = f(&cand, &mut cand_g);
            if v.is_finite() && v >= value && cand_g.iter().all(|c| c.is_finite()) {
                std::mem::swap(&mut x, &mut cand);
                std::mem::swap(&mut g, &mut cand_g);
                value = v;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if !accepted {
            converged = true;
            break;
        }
        lr = (lr * 1.25).min(cfg.learning_rate);
        trace.push(value);
        let len = trace.len();
        if len > cfg.patience && trace[len - 1] - trace[len - 1 - cfg.patience] < cfg.tolerance * n {
            converged = true;
            break;
        }
    }
    Ok(Ascent {
        params: x,
        value,
        iterations,
        converged,
        trace,
    })
}
