//! Episode loop, multi-seed suites, and result files.
//!
//! An episode draws an environment and observational sample from its seed,
//! fits m̂₀ and m̂₁ once, and then for each of `budget` rounds picks an
//! intervention, records the P_DC estimate there, queries the environment,
//! and updates the hypothesis posterior.

mod csv_io;
mod plot;
mod suite;

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use csv_io::{read_csv, rows_to_episodes, write_csv, write_csv_file, CsvRow, CSV_HEADER};
pub use plot::{render_svg, write_plot_file, Metric};
pub use suite::{aggregate, run_suite, AggregateRow, EpisodeFailure, SuiteResult};

use crate::bayes::{self, classify_log_evidence, EvidenceLevel, HypothesisPosterior};
use crate::error::{Error, Result};
use crate::fitting::{fit_models, FitConfig, FittedModels};
use crate::optimize::Bounds;
use crate::pdc::{self, FrozenNoise, PdcConfig};
use crate::rng::{self, Stream};
use crate::scm::{Dataset, DataKind, Hypothesis, NoiseMode, Scenario, ScenarioSpec, TanhLink};
use crate::strategy::{self, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub strategy: StrategyKind,
    pub pdc: PdcConfig,
    pub n_obs: usize,
    /// Number of intervention rounds, M.
    pub budget: usize,
    pub bounds: Bounds,
    pub noise_mode: NoiseMode,
    /// Components in each generated noise distribution.
    pub noise_components: usize,
    pub seeds: Vec<u64>,
    pub link_f: TanhLink,
    pub link_g: TanhLink,
    pub fit: FitConfig,
    /// Fill `wall_ms`; off by default so output files are reproducible.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::EffectToCause,
            strategy: StrategyKind::PdcMax,
            pdc: PdcConfig::default(),
            n_obs: 5000,
            budget: 50,
            bounds: Bounds::default(),
            noise_mode: NoiseMode::FixedPositions,
            noise_components: 3,
            seeds: (0..10).collect(),
            link_f: TanhLink::default(),
            link_g: TanhLink::default(),
            fit: FitConfig::default(),
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.pdc.validate()?;
        self.fit.validate()?;
        Bounds::new(self.bounds.lo, self.bounds.hi)?;
        if self.n_obs < self.fit.min_points() {
            return Err(Error::ConfigInvalid(format!(
                "n_obs = {} is below 10 × fit components = {}",
                self.n_obs,
                self.fit.min_points()
            )));
        }
        if self.noise_components == 0 {
            return Err(Error::ConfigInvalid("noise needs at least one component".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::ConfigInvalid("at least one seed is required".into()));
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::ConfigInvalid("seeds must be distinct".into()));
        }
        for (name, link) in [("f", self.link_f), ("g", self.link_g)] {
            if !link.a.is_finite() || !link.b.is_finite() {
                return Err(Error::ConfigInvalid(format!("link {name} must be finite")));
            }
        }
        Ok(())
    }

    /// The ground-truth environment for `seed`.
    pub fn environment(&self, seed: u64) -> Result<ScenarioSpec> {
        ScenarioSpec::generate(
            self.scenario,
            self.link_f,
            self.link_g,
            self.noise_mode,
            self.noise_components,
            &mut rng::stream(seed, Stream::NoiseSpec),
        )
    }

    /// Draws D_obs for `seed` and fits both hypothesis models to it.
    pub fn prepare(&self, seed: u64) -> Result<Prepared> {
        let env = self.environment(seed)?;
        let obs = env.sample_observational(self.n_obs, &mut rng::stream(seed, Stream::Observational));
        let models = fit_models(&obs, &self.fit, &mut rng::stream(seed, Stream::Fitting))?;
        Ok(Prepared { env, models })
    }
}

/// Environment and fitted models for one (config, seed).
#[derive(Debug, Clone)]
pub struct Prepared {
    pub env: ScenarioSpec,
    pub models: FittedModels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based round index.
    pub step: usize,
    pub x: f64,
    pub y: f64,
    /// Cumulative log BF₀₁ over the first `step` interventions.
    pub log_bf01: f64,
    pub posterior_h0: f64,
    pub posterior_h1: f64,
    pub posterior_gt: f64,
    /// P_DC estimate at the chosen x, before its response was observed.
    pub pdc_est: f64,
    pub evidence: EvidenceLevel,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario: Scenario,
    pub strategy: StrategyKind,
    pub k0: f64,
    pub seed: u64,
    pub models: Option<FittedModels>,
    pub steps: Vec<StepRecord>,
}

pub fn run_episode(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<StepRecord>> {
    cfg.validate()?;
    let prepared = cfg.prepare(seed)?;
    Ok(run_prepared(cfg, seed, &prepared))
}

/// The intervention loop on already fitted models.
pub fn run_prepared(cfg: &ExperimentConfig, seed: u64, prepared: &Prepared) -> Vec<StepRecord> {
    let Prepared { env, models } = prepared;
    let truth = cfg.scenario.truth();
    let mut env_rng = rng::stream(seed, Stream::Environment);
    let mut d_int = Dataset::empty(DataKind::Interventional);
    let mut posterior = HypothesisPosterior::uniform();
    let mut log_bf = 0.0;
    let mut records = Vec::with_capacity(cfg.budget);

    for round in 0..cfg.budget {
        let started = Instant::now();
        let idx = round as u64;
        let x = strategy::select_intervention(
            cfg.strategy,
            models,
            &d_int,
            posterior,
            &cfg.pdc,
            cfg.bounds,
            &mut rng::substream(seed, Stream::Strategy, idx),
        );
        // Evaluated on draws no strategy has seen, so the metric means the
        // same thing for every strategy.
        let noise = FrozenNoise::draw(models, cfg.pdc.n_mc, &mut rng::substream(seed, Stream::MonteCarlo, idx));
        let pdc_est = pdc::estimate_pdc(x, models, &d_int, posterior, &cfg.pdc, &noise);

        let y = env.sample_interventional(x, &mut env_rng);
        d_int.push(x, y);
        log_bf += bayes::log_ratio(models, x, y);
        posterior = bayes::update_posterior(HypothesisPosterior::uniform(), log_bf);

        let (p0, p1) = (posterior.p_h0(), posterior.p_h1());
        records.push(StepRecord {
            step: round + 1,
            x,
            y,
            log_bf01: log_bf,
            posterior_h0: p0,
            posterior_h1: p1,
            posterior_gt: match truth {
                Hypothesis::H0 => p0,
                Hypothesis::H1 => p1,
            },
            pdc_est,
            evidence: classify_log_evidence(log_bf),
            wall_ms: if cfg.record_timing {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        });
    }
    records
}
