//! Independent quadrature oracles for the single-Gaussian setup
//! m₀ = N(0, 1), m₁(y | x) = N(A·tanh(x), 1), written directly from the
//! densities without going through the library's mixture code.

#![allow(dead_code)]

use pdc_core::{FittedModels, MixtureOfNormals, TanhLink};

pub const Y_LO: f64 = -20.0;
pub const Y_HI: f64 = 20.0;
pub const NODES: usize = 400_001;

pub fn single_gaussian_models(a: f64) -> FittedModels {
    FittedModels::from_parts(
        MixtureOfNormals::normal(0.0, 1.0).unwrap(),
        TanhLink::new(a, 1.0),
        MixtureOfNormals::normal(0.0, 1.0).unwrap(),
    )
}

fn log_phi(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Trapezoid rule over [Y_LO, Y_HI].
pub fn trapezoid(f: impl Fn(f64) -> f64) -> f64 {
    let h = (Y_HI - Y_LO) / (NODES - 1) as f64;
    let mut acc = 0.5 * (f(Y_LO) + f(Y_HI));
    for i in 1..NODES - 1 {
        acc += f(Y_LO + i as f64 * h);
    }
    acc * h
}

/// Setup for one oracle evaluation: link amplitude, prior log BF of the
/// accumulated data, and the current posterior.
#[derive(Clone, Copy)]
pub struct Oracle {
    pub a: f64,
    pub base_log_bf: f64,
    pub p0: f64,
}

impl Oracle {
    pub fn uniform(a: f64) -> Self {
        Self { a, base_log_bf: 0.0, p0: 0.5 }
    }

    fn mean1(&self, x: f64) -> f64 {
        self.a * x.tanh()
    }

    fn log_bf(&self, x: f64, y: f64) -> f64 {
        self.base_log_bf + log_phi(y) - log_phi(y - self.mean1(x))
    }

    /// Exact decisiveness probability with hard indicators.
    pub fn pdc_hard(&self, x: f64, k0: f64, k1: f64) -> f64 {
        let mu = self.mean1(x);
        let t0 = trapezoid(|y| if self.log_bf(x, y) > k0.ln() { log_phi(y).exp() } else { 0.0 });
        let t1 = trapezoid(|y| if self.log_bf(x, y) < k1.ln() { log_phi(y - mu).exp() } else { 0.0 });
        self.p0 * t0 + (1.0 - self.p0) * t1
    }

    /// Expectation of the smoothed indicators.
    pub fn pdc_smoothed(&self, x: f64, k0: f64, k1: f64, beta: f64) -> f64 {
        let mu = self.mean1(x);
        let step = |t: f64| (-t.max(0.0) / beta).exp();
        let bf = |y: f64| self.log_bf(x, y).min(700.0).exp();
        let t0 = trapezoid(|y| step(k0 - bf(y)) * log_phi(y).exp());
        let t1 = trapezoid(|y| step(bf(y) - k1) * log_phi(y - mu).exp());
        self.p0 * t0 + (1.0 - self.p0) * t1
    }

    /// Probability mass whose ReLU argument lies in (0, width].
    pub fn near_kink_mass(&self, x: f64, k0: f64, k1: f64, width: f64) -> f64 {
        let mu = self.mean1(x);
        let inside = |t: f64| t > 0.0 && t <= width;
        let bf = |y: f64| self.log_bf(x, y).min(700.0).exp();
        let t0 = trapezoid(|y| if inside(k0 - bf(y)) { log_phi(y).exp() } else { 0.0 });
        let t1 = trapezoid(|y| if inside(bf(y) - k1) { log_phi(y - mu).exp() } else { 0.0 });
        self.p0 * t0 + (1.0 - self.p0) * t1
    }

    /// Information-gain objective (x-independent constant dropped).
    pub fn info_gain(&self, x: f64) -> f64 {
        let (p0, p1) = (self.p0, 1.0 - self.p0);
        let mu = self.mean1(x);
        let q0 = |l: f64| -(p0 + p1 * (-l).exp()).ln();
        let t0 = trapezoid(|y| log_phi(y).exp() * q0(self.log_bf(x, y)));
        let t1 = trapezoid(|y| {
            let l = self.log_bf(x, y);
            log_phi(y - mu).exp() * (q0(l) - l)
        });
        p0 * t0 + p1 * t1
    }
}

/// The 20-point evaluation grid on [−5, 5].
pub fn grid20() -> Vec<f64> {
    (0..20).map(|i| -5.0 + 10.0 * i as f64 / 19.0).collect()
}
