//! Bayes factors between the two fitted hypotheses, their evidence levels,
//! and the posterior over hypotheses.
//!
//! All accumulation happens on log BF₀₁; a raw Bayes factor is only
//! materialized for classification and reporting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::FittedModels;
use crate::scm::Dataset;
use crate::stats;

/// Largest |log BF| materialized by [`bf_from_log`]; e^700 is still finite.
pub const MAX_LOG_BF: f64 = 700.0;

/// log m̂₀(y) − log m̂₁(y | x) for one interventional point.
pub fn log_ratio(models: &FittedModels, x: f64, y: f64) -> f64 {
    models.log_m0(y) - models.log_m1(y, x)
}

/// log BF₀₁ = Σᵢ [log m̂₀(yᵢ) − log m̂₁(yᵢ | xᵢ)]; zero for no data.
pub fn log_bf01(models: &FittedModels, data: &Dataset) -> f64 {
    data.pairs.iter().map(|&(x, y)| log_ratio(models, x, y)).sum()
}

/// exp(log_bf) clamped to [e^−700, e^700]; the flag is set when clamped.
pub fn bf_from_log(log_bf: f64) -> (f64, bool) {
    let clamped = log_bf.clamp(-MAX_LOG_BF, MAX_LOG_BF);
    (clamped.exp(), clamped != log_bf)
}

/// Jeffreys-style evidence categories for BF₀₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceLevel {
    ExtremeH1,
    VeryStrongH1,
    StrongH1,
    ModerateH1,
    AnecdotalH1,
    NoEvidence,
    AnecdotalH0,
    ModerateH0,
    StrongH0,
    VeryStrongH0,
    ExtremeH0,
}

impl EvidenceLevel {
    pub const ALL: [EvidenceLevel; 11] = [
        EvidenceLevel::ExtremeH1,
        EvidenceLevel::VeryStrongH1,
        EvidenceLevel::StrongH1,
        EvidenceLevel::ModerateH1,
        EvidenceLevel::AnecdotalH1,
        EvidenceLevel::NoEvidence,
        EvidenceLevel::AnecdotalH0,
        EvidenceLevel::ModerateH0,
        EvidenceLevel::StrongH0,
        EvidenceLevel::VeryStrongH0,
        EvidenceLevel::ExtremeH0,
    ];

    /// The same strength for the other hypothesis.
    pub fn mirror(self) -> Self {
        let i = Self::ALL.iter().position(|l| *l == self).expect("listed");
        Self::ALL[Self::ALL.len() - 1 - i]
    }

    pub fn name(self) -> &'static str {
        match self {
            EvidenceLevel::ExtremeH1 => "extreme_h1",
            EvidenceLevel::VeryStrongH1 => "very_strong_h1",
            EvidenceLevel::StrongH1 => "strong_h1",
            EvidenceLevel::ModerateH1 => "moderate_h1",
            EvidenceLevel::AnecdotalH1 => "anecdotal_h1",
            EvidenceLevel::NoEvidence => "no_evidence",
            EvidenceLevel::AnecdotalH0 => "anecdotal_h0",
            EvidenceLevel::ModerateH0 => "moderate_h0",
            EvidenceLevel::StrongH0 => "strong_h0",
            EvidenceLevel::VeryStrongH0 => "very_strong_h0",
            EvidenceLevel::ExtremeH0 => "extreme_h0",
        }
    }
}

impl fmt::Display for EvidenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvidenceLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Csv(format!("unknown evidence level `{s}`")))
    }
}

/// Boundaries between H₀ categories; a value on a boundary belongs to the
/// stronger category.
const H0_BOUNDS: [(f64, EvidenceLevel); 4] = [
    (100.0, EvidenceLevel::ExtremeH0),
    (30.0, EvidenceLevel::VeryStrongH0),
    (10.0, EvidenceLevel::StrongH0),
    (3.0, EvidenceLevel::ModerateH0),
];

pub fn classify_evidence(bf01: f64) -> Result<EvidenceLevel> {
    if !(bf01 > 0.0) {
        return Err(Error::NonPositive(bf01));
    }
    if bf01 == 1.0 {
        return Ok(EvidenceLevel::NoEvidence);
    }
    // BF < 1 is classified through 1/BF, which makes the two sides mirror
    // images of each other.
    let (strength, towards_h0) = if bf01 > 1.0 { (bf01, true) } else { (1.0 / bf01, false) };
    let level = H0_BOUNDS
        .iter()
        .find(|(bound, _)| strength >= *bound)
        .map(|(_, l)| *l)
        .unwrap_or(EvidenceLevel::AnecdotalH0);
    Ok(if towards_h0 { level } else { level.mirror() })
}

/// Classification from log BF₀₁, without overflow for extreme values.
pub fn classify_log_evidence(log_bf01: f64) -> EvidenceLevel {
    if log_bf01 == 0.0 {
        return EvidenceLevel::NoEvidence;
    }
    let (bf, _) = bf_from_log(log_bf01);
    classify_evidence(bf).expect("exp of a finite value is positive")
}

/// Posterior over {H₀, H₁}, stored as log[P(H₀|D) / P(H₁|D)].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPosterior {
    pub log_odds_h0: f64,
}

impl Default for HypothesisPosterior {
    /// Uniform prior, P(H₀) = P(H₁) = ½.
    fn default() -> Self {
        Self::uniform()
    }
}

impl HypothesisPosterior {
    pub fn uniform() -> Self {
        Self { log_odds_h0: 0.0 }
    }

    pub fn from_log_odds(log_odds_h0: f64) -> Self {
        Self { log_odds_h0 }
    }

    /// Posterior with P(H₀) = p, for p ∈ (0, 1).
    pub fn from_prob_h0(p: f64) -> Self {
        Self {
            log_odds_h0: p.ln() - (-p).ln_1p(),
        }
    }

    pub fn p_h0(&self) -> f64 {
        stats::sigmoid(self.log_odds_h0)
    }

    /// 1 − P(H₀), so the two always sum to one.
    pub fn p_h1(&self) -> f64 {
        1.0 - self.p_h0()
    }
}

/// Bayes' rule in odds form: posterior odds = prior odds × BF₀₁.
pub fn update_posterior(prior: HypothesisPosterior, log_bf_total: f64) -> HypothesisPosterior {
    HypothesisPosterior {
        log_odds_h0: prior.log_odds_h0 + log_bf_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{normal_pdf, MixtureOfNormals};
    use crate::scm::TanhLink;
    use proptest::prelude::*;

    fn gaussian_models(a: f64) -> FittedModels {
        FittedModels::from_parts(
            MixtureOfNormals::normal(0.0, 1.0).unwrap(),
            TanhLink::new(a, 1.0),
            MixtureOfNormals::normal(0.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn empty_dataset_has_zero_log_bf() {
        assert_eq!(log_bf01(&gaussian_models(2.0), &Dataset::interventional(vec![])), 0.0);
    }

    #[test]
    fn single_point_closed_form() {
        let d = Dataset::interventional(vec![(1.0, 0.0)]);
        let got = log_bf01(&gaussian_models(2.0), &d);
        let mu = 2.0 * 1.0f64.tanh();
        let oracle = (normal_pdf(0.0, 0.0, 1.0) / normal_pdf(0.0, mu, 1.0)).ln();
        assert!((got - mu * mu / 2.0).abs() < 1e-12);
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 1.160).abs() < 1e-3);
    }

    #[test]
    fn identical_models_give_zero() {
        let d = Dataset::interventional(vec![(1.0, 0.3), (-2.0, 5.0), (4.0, -1.0)]);
        assert_eq!(log_bf01(&gaussian_models(0.0), &d), 0.0);
    }

    #[test]
    fn table_examples() {
        assert_eq!(classify_evidence(50.0).unwrap(), EvidenceLevel::VeryStrongH0);
        assert_eq!(classify_evidence(1.0).unwrap(), EvidenceLevel::NoEvidence);
        assert_eq!(classify_evidence(0.02).unwrap(), EvidenceLevel::VeryStrongH1);
        assert_eq!(classify_evidence(0.0), Err(Error::NonPositive(0.0)));
        assert!(classify_evidence(-3.0).is_err());
        assert!(classify_evidence(f64::NAN).is_err());
    }

    #[test]
    fn log_classification_saturates() {
        assert_eq!(classify_log_evidence(5000.0), EvidenceLevel::ExtremeH0);
        assert_eq!(classify_log_evidence(-5000.0), EvidenceLevel::ExtremeH1);
        assert_eq!(classify_log_evidence(0.0), EvidenceLevel::NoEvidence);
        assert_eq!(bf_from_log(800.0), (700f64.exp(), true));
        assert_eq!(bf_from_log(1.0), (1f64.exp(), false));
    }

    #[test]
    fn posterior_arithmetic() {
        let p = update_posterior(HypothesisPosterior::uniform(), 0.0);
        assert_eq!((p.p_h0(), p.p_h1()), (0.5, 0.5));
        let p = update_posterior(HypothesisPosterior::uniform(), 10f64.ln());
        assert!((p.p_h0() - 10.0 / 11.0).abs() < 1e-15);
        let (a, b) = (3f64.ln(), 0.2f64.ln());
        let two = update_posterior(update_posterior(HypothesisPosterior::uniform(), a), b);
        let one = update_posterior(HypothesisPosterior::uniform(), (3.0f64 * 0.2).ln());
        assert!((two.log_odds_h0 - one.log_odds_h0).abs() < 1e-15);
        let q = HypothesisPosterior::from_prob_h0(0.8);
        assert!((q.p_h0() - 0.8).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn mirror_categories(log_x in -12.0f64..12.0) {
            let x = log_x.exp();
            let a = classify_evidence(x).unwrap();
            let b = classify_evidence(1.0 / x).unwrap();
            prop_assert_eq!(a.mirror(), b);
        }

        #[test]
        fn probabilities_sum_to_one(l in -800.0f64..800.0) {
            let p = HypothesisPosterior::from_log_odds(l);
            prop_assert_eq!(p.p_h0() + p.p_h1(), 1.0);
            prop_assert!((0.0..=1.0).contains(&p.p_h0()));
        }

        #[test]
        fn log_bf_additive_and_order_invariant(
            pts in proptest::collection::vec((-5.0f64..5.0, -6.0f64..6.0), 0..40),
            cut in 0usize..40,
        ) {
            let m = gaussian_models(2.0);
            let cut = cut.min(pts.len());
            let whole = log_bf01(&m, &Dataset::interventional(pts.clone()));
            let a = log_bf01(&m, &Dataset::interventional(pts[..cut].to_vec()));
            let b = log_bf01(&m, &Dataset::interventional(pts[cut..].to_vec()));
            prop_assert!((whole - (a + b)).abs() <= 1e-10 * (1.0 + whole.abs()));
            let mut rev = pts.clone();
            rev.reverse();
            let r = update_posterior(HypothesisPosterior::uniform(), log_bf01(&m, &Dataset::interventional(rev)));
            let f = update_posterior(HypothesisPosterior::uniform(), whole);
            prop_assert!((r.p_h0() - f.p_h0()).abs() <= 1e-12);
        }
    }
}
