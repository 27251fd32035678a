//! Active interventions for deciding whether X causes Y.
//!
//! Two hypotheses about the interventional distribution are compared:
//! H₀: p(y | do(X = x)) = p(y) and H₁: p(y | do(X = x)) = p(y | x). Both
//! are estimated from observational data ([`fitting`]), each new
//! interventional point updates a Bayes factor and the hypothesis posterior
//! ([`bayes`]), and the next intervention is chosen to maximize the
//! probability that the Bayes factor becomes decisive for the true hypothesis
//! ([`pdc`]). [`strategy`] holds this policy alongside information-gain and
//! random baselines; [`harness`] runs simulated experiments against the
//! environments in [`scm`].

pub mod bayes;
pub mod error;
pub mod fitting;
pub mod harness;
pub mod mixture;
pub mod optimize;
pub mod pdc;
pub mod rng;
pub mod scm;
pub mod stats;
pub mod strategy;

// Lets the oracle module shared with the integration tests name this crate.
#[cfg(test)]
extern crate self as pdc_core;

pub use bayes::{classify_evidence, log_bf01, update_posterior, EvidenceLevel, HypothesisPosterior};
pub use error::{Error, Result};
pub use fitting::{fit_m0, fit_m1, fit_models, FitConfig, FittedModels};
pub use harness::{run_episode, run_suite, EpisodeResult, ExperimentConfig, StepRecord};
pub use mixture::MixtureOfNormals;
pub use optimize::Bounds;
pub use pdc::{estimate_pdc, optimize_intervention, pdc_gradient, FrozenNoise, PdcConfig};
pub use scm::{Dataset, NoiseMode, Scenario, ScenarioSpec, TanhLink};
pub use strategy::{estimate_info_gain, select_intervention, StrategyKind};
