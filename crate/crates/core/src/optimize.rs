//! Multi-start projected gradient ascent on an interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::ConfigInvalid(format!("bounds need lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    /// `n` evenly spaced points including both ends (the midpoint if n = 1).
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.5 * (self.lo + self.hi)],
            _ => (0..n)
                .map(|i| self.lo + self.width() * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self { lo: -5.0, hi: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentSettings {
    pub starts: usize,
    pub max_steps: usize,
}

/// Maximizes `f` (returning value and derivative) over `bounds`.
///
/// Each start climbs with steps of length δ along the gradient sign,
/// projected back onto the interval. δ grows by 1.5 after an improving step
/// and halves after a rejected one; a start ends when the gradient vanishes,
/// the projection pins it to a bound, or δ falls below 1e-7 of the width.
///
/// Among the final iterates the largest value wins; exact ties go to the
/// smallest |x|, then the smallest x.
pub fn maximize(
    mut f: impl FnMut(f64) -> (f64, f64),
    bounds: Bounds,
    settings: AscentSettings,
) -> (f64, f64) {
    let min_step = 1e-7 * bounds.width();
    let mut best: Option<(f64, f64)> = None;
    for start in bounds.grid(settings.starts.max(1)) {
        let mut x = start;
        let (mut v, mut g) = f(x);
        let mut step = bounds.width() / 16.0;
        for _ in 0..settings.max_steps {
            if g == 0.0 || !g.is_finite() || step < min_step {
                break;
            }
            let cand = bounds.clip(x + step * g.signum());
            if cand == x {
                break;
            }
            let (cv, cg) = f(cand);
            if cv > v {
                x = cand;
                v = cv;
                g = cg;
                step = (step * 1.5).min(bounds.width());
            } else {
                step *= 0.5;
            }
        }
        best = Some(match best {
            None => (x, v),
            Some(b) if better(x, v, b) => (x, v),
            Some(b) => b,
        });
    }
    best.expect("at least one start")
}

fn better(x: f64, v: f64, (bx, bv): (f64, f64)) -> bool {
    if v != bv {
        return v > bv;
    }
    match x.abs().total_cmp(&bx.abs()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => x < bx,
    }
}
