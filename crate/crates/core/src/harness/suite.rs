use std::collections::BTreeMap;
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::{run_prepared, EpisodeResult, ExperimentConfig, Prepared, StepRecord};
use crate::error::{Error, Result};
use crate::scm::Scenario;
use crate::stats;
use crate::strategy::StrategyKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFailure {
    pub scenario: Scenario,
    pub strategy: StrategyKind,
    pub k0: f64,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    /// Sorted by (scenario, strategy, k0, seed).
    pub episodes: Vec<EpisodeResult>,
    pub failures: Vec<EpisodeFailure>,
}

impl SuiteResult {
    pub fn aggregates(&self) -> Vec<AggregateRow> {
        aggregate(&self.episodes)
    }
}

/// Mean and population standard deviation of each metric across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: Scenario,
    pub strategy: StrategyKind,
    pub k0: f64,
    pub step: usize,
    pub n: usize,
    pub pdc_est_mean: f64,
    pub pdc_est_std: f64,
    pub log_bf01_mean: f64,
    pub log_bf01_std: f64,
    pub posterior_gt_mean: f64,
    pub posterior_gt_std: f64,
}

type EpisodeKey = (Scenario, StrategyKind, u64, u64);

fn episode_key(e: &EpisodeResult) -> EpisodeKey {
    (e.scenario, e.strategy, e.k0.to_bits(), e.seed)
}

pub fn aggregate(episodes: &[EpisodeResult]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&EpisodeResult> = episodes.iter().collect();
    sorted.sort_by(|a, b| {
        (a.scenario, a.strategy, a.k0, a.seed)
            .partial_cmp(&(b.scenario, b.strategy, b.k0, b.seed))
            .expect("k0 is finite")
    });
    let mut groups: Vec<((Scenario, StrategyKind, f64), BTreeMap<usize, Vec<&StepRecord>>)> = Vec::new();
    for e in sorted {
        let key = (e.scenario, e.strategy, e.k0);
        if groups.last().is_none_or(|(k, _)| *k != key) {
            groups.push((key, BTreeMap::new()));
        }
        let steps = &mut groups.last_mut().expect("just pushed").1;
        for s in &e.steps {
            steps.entry(s.step).or_default().push(s);
        }
    }
    let mut out = Vec::new();
    for ((scenario, strategy, k0), steps) in groups {
        for (step, recs) in steps {
            let col = |f: fn(&StepRecord) -> f64| recs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (pdc, lbf, gt) = (col(|r| r.pdc_est), col(|r| r.log_bf01), col(|r| r.posterior_gt));
            out.push(AggregateRow {
                scenario,
                strategy,
                k0,
                step,
                n: recs.len(),
                pdc_est_mean: stats::mean(&pdc),
                pdc_est_std: stats::std_dev(&pdc),
                log_bf01_mean: stats::mean(&lbf),
                log_bf01_std: stats::std_dev(&lbf),
                posterior_gt_mean: stats::mean(&gt),
                posterior_gt_std: stats::std_dev(&gt),
            });
        }
    }
    out
}

/// Everything that determines D_obs and the fitted models. Episodes sharing
/// a key differ only in strategy or thresholds and reuse one fit.
fn preparation_key(cfg: &ExperimentConfig, seed: u64) -> String {
    format!(
        "{:?}|{:?}|{:?}|{:?}|{}|{}|{:?}|{}",
        cfg.scenario, cfg.link_f, cfg.link_g, cfg.noise_mode, cfg.noise_components, cfg.n_obs, cfg.fit, seed
    )
}

/// Runs every (config, seed) episode of the grid. Episodes that fail are
/// reported in `failures`; the rest of the suite still runs.
pub fn run_suite(grid: &[ExperimentConfig]) -> Result<SuiteResult> {
    if grid.is_empty() {
        return Err(Error::ConfigInvalid("suite grid is empty".into()));
    }
    for cfg in grid {
        cfg.validate()?;
    }
    let mut units: BTreeMap<String, Vec<(&ExperimentConfig, u64)>> = BTreeMap::new();
    for cfg in grid {
        for &seed in &cfg.seeds {
            units.entry(preparation_key(cfg, seed)).or_default().push((cfg, seed));
        }
    }
    let units: Vec<Vec<(&ExperimentConfig, u64)>> = units.into_values().collect();

    let next = Mutex::new(0usize);
    let results = Mutex::new((Vec::new(), Vec::new()));
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(units.len());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("lock");
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(unit) = units.get(i) else { break };
                let (first, seed) = unit[0];
                let (ok, failed) = run_unit(unit, first.prepare(seed));
                let mut r = results.lock().expect("lock");
                r.0.extend(ok);
                r.1.extend(failed);
            });
        }
    });
    let (mut episodes, mut failures) = results.into_inner().expect("lock");
    episodes.sort_by_key(episode_key);
    failures.sort_by(|a: &EpisodeFailure, b| {
        (a.scenario, a.strategy, a.k0.to_bits(), a.seed).cmp(&(b.scenario, b.strategy, b.k0.to_bits(), b.seed))
    });
    Ok(SuiteResult { episodes, failures })
}

fn run_unit(
    unit: &[(&ExperimentConfig, u64)],
    prepared: Result<Prepared>,
) -> (Vec<EpisodeResult>, Vec<EpisodeFailure>) {
    match prepared {
        Ok(prepared) => {
            let episodes = unit
                .iter()
                .map(|(cfg, seed)| EpisodeResult {
                    scenario: cfg.scenario,
                    strategy: cfg.strategy,
                    k0: cfg.pdc.k0,
                    seed: *seed,
                    models: Some(prepared.models.clone()),
                    steps: run_prepared(cfg, *seed, &prepared),
                })
                .collect();
            (episodes, Vec::new())
        }
        Err(e) => {
            let failures = unit
                .iter()
                .map(|(cfg, seed)| EpisodeFailure {
                    scenario: cfg.scenario,
                    strategy: cfg.strategy,
                    k0: cfg.pdc.k0,
                    seed: *seed,
                    message: e.to_string(),
                })
                .collect();
            (Vec::new(), failures)
        }
    }
}
