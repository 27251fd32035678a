use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use pdc_core::harness::{self, write_csv, ExperimentConfig};
use pdc_core::{Bounds, NoiseMode, Scenario, StrategyKind};

#[derive(Parser)]
#[command(name = "pdc", version, about = "Active interventions for cause-effect hypothesis tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its per-step CSV.
    Run(Common),
    /// Run every (scenario, strategy, k0, seed) combination.
    Suite {
        #[command(flatten)]
        common: Common,
        /// Also render the aggregated curves to this SVG file.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Render aggregated curves from a results CSV.
    Plot {
        /// Results CSV written by `run` or `suite`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Default)]
struct Common {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Repeat in `suite` to select several; `suite` defaults to all three.
    #[arg(long, value_parser = parse_from_str::<Scenario>)]
    scenario: Vec<Scenario>,
    #[arg(long, value_parser = parse_from_str::<StrategyKind>)]
    strategy: Vec<StrategyKind>,
    /// Decisiveness threshold for H0. Repeat in `suite` for a sweep.
    #[arg(long)]
    k0: Vec<f64>,
    /// Decisiveness threshold for H1 [default: 1/k0].
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    n_obs: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    bounds: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_noise_mode)]
    noise_mode: Option<NoiseMode>,
    /// Use seeds 0..N.
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<u64>,
    #[arg(long, num_args = 1..)]
    seed_list: Option<Vec<u64>>,
    #[arg(long)]
    fit_components: Option<usize>,
    /// Record per-step wall-clock time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_from_str<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn parse_noise_mode(s: &str) -> Result<NoiseMode, String> {
    match s {
        "fixed" => Ok(NoiseMode::FixedPositions),
        "random" => Ok(NoiseMode::FullyRandom),
        other => Err(format!("unknown noise mode `{other}` (expected fixed or random)")),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scenario: Option<OneOrMany<String>>,
    strategy: Option<OneOrMany<String>>,
    k0: Option<OneOrMany<f64>>,
    k1: Option<f64>,
    beta: Option<f64>,
    mc_samples: Option<usize>,
    n_obs: Option<usize>,
    budget: Option<usize>,
    bounds: Option<[f64; 2]>,
    noise_mode: Option<String>,
    seeds: Option<u64>,
    seed_list: Option<Vec<u64>>,
    fit_components: Option<usize>,
    timing: Option<bool>,
    out: Option<PathBuf>,
}

/// Errors that map to exit status 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn parse_names<T>(names: Option<OneOrMany<String>>) -> anyhow::Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    names
        .map(OneOrMany::into_vec)
        .unwrap_or_default()
        .iter()
        .map(|s| s.parse::<T>().map_err(|e| config_err(e.to_string())))
        .collect()
}

/// Command-line values layered over the file and then over defaults.
struct Resolved {
    scenarios: Vec<Scenario>,
    strategies: Vec<StrategyKind>,
    k0s: Vec<f64>,
    base: ExperimentConfig,
    k1: Option<f64>,
    out: Option<PathBuf>,
}

fn resolve(cli: Common) -> anyhow::Result<Resolved> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let scenarios = if cli.scenario.is_empty() {
        parse_names(file.scenario)?
    } else {
        cli.scenario
    };
    let strategies = if cli.strategy.is_empty() {
        parse_names(file.strategy)?
    } else {
        cli.strategy
    };
    let k0s = if cli.k0.is_empty() { file.k0.map(OneOrMany::into_vec).unwrap_or_default() } else { cli.k0 };

    let mut base = ExperimentConfig::default();
    if let Some(v) = cli.beta.or(file.beta) {
        base.pdc.beta = v;
    }
    if let Some(v) = cli.mc_samples.or(file.mc_samples) {
        base.pdc.n_mc = v;
    }
    if let Some(v) = cli.n_obs.or(file.n_obs) {
        base.n_obs = v;
    }
    if let Some(v) = cli.budget.or(file.budget) {
        base.budget = v;
    }
    if let Some(b) = cli.bounds.map(|b| [b[0], b[1]]).or(file.bounds) {
        base.bounds = Bounds::new(b[0], b[1]).map_err(|e| config_err(e.to_string()))?;
    }
    let noise_mode = match cli.noise_mode {
        Some(m) => Some(m),
        None => file.noise_mode.as_deref().map(parse_noise_mode).transpose().map_err(config_err)?,
    };
    if let Some(m) = noise_mode {
        base.noise_mode = m;
    }
    let seeds = match (cli.seed_list, cli.seeds) {
        (Some(list), _) => Some(list),
        (None, Some(n)) => Some((0..n).collect()),
        (None, None) => file.seed_list.or(file.seeds.map(|n| (0..n).collect())),
    };
    if let Some(s) = seeds {
        base.seeds = s;
    }
    if let Some(k) = cli.fit_components.or(file.fit_components) {
        base.fit.components = k;
    }
    base.record_timing = cli.timing || file.timing.unwrap_or(false);

    Ok(Resolved {
        scenarios,
        strategies,
        k0s,
        base,
        k1: cli.k1.or(file.k1),
        out: cli.out.or(file.out),
    })
}

impl Resolved {
    fn grid(&self) -> anyhow::Result<Vec<ExperimentConfig>> {
        let scenarios = if self.scenarios.is_empty() { Scenario::ALL.to_vec() } else { self.scenarios.clone() };
        let strategies = if self.strategies.is_empty() { StrategyKind::ALL.to_vec() } else { self.strategies.clone() };
        let k0s = if self.k0s.is_empty() { vec![self.base.pdc.k0] } else { self.k0s.clone() };
        let mut grid = Vec::new();
        for &scenario in &scenarios {
            for &strategy in &strategies {
                for &k0 in &k0s {
                    let mut cfg = self.base.clone();
                    cfg.scenario = scenario;
                    cfg.strategy = strategy;
                    cfg.pdc.k0 = k0;
                    cfg.pdc.k1 = self.k1.unwrap_or(1.0 / k0);
                    cfg.validate().map_err(|e| config_err(e.to_string()))?;
                    grid.push(cfg);
                }
            }
        }
        Ok(grid)
    }
}

fn emit_csv(out: Option<&Path>, episodes: &[harness::EpisodeResult]) -> anyhow::Result<()> {
    match out {
        Some(path) => harness::write_csv_file(path, episodes)?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(episodes, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run(common) => {
            let mut r = resolve(common)?;
            if r.scenarios.len() > 1 || r.strategies.len() > 1 || r.k0s.len() > 1 {
                return Err(config_err("`run` takes one scenario, strategy and k0; use `suite` for sweeps"));
            }
            if r.scenarios.is_empty() {
                r.scenarios.push(r.base.scenario);
            }
            if r.strategies.is_empty() {
                r.strategies.push(r.base.strategy);
            }
            let mut cfg = r.grid()?.remove(0);
            let seed = cfg.seeds[0];
            cfg.seeds = vec![seed];
            let steps = match pdc_core::run_episode(&cfg, seed) {
                Ok(steps) => steps,
                Err(e @ pdc_core::Error::ConfigInvalid(_)) => return Err(config_err(e.to_string())),
                Err(e) => {
                    eprintln!("episode failed: seed={seed}: {e}");
                    return Ok(ExitCode::from(3));
                }
            };
            let episode = harness::EpisodeResult {
                scenario: cfg.scenario,
                strategy: cfg.strategy,
                k0: cfg.pdc.k0,
                seed,
                models: None,
                steps,
            };
            emit_csv(r.out.as_deref(), &[episode])?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Suite { common, plot } => {
            let r = resolve(common)?;
            let grid = r.grid()?;
            let result = harness::run_suite(&grid).map_err(|e| config_err(e.to_string()))?;
            emit_csv(r.out.as_deref(), &result.episodes)?;
            if let Some(path) = plot {
                harness::write_plot_file(&path, &result.aggregates())?;
            }
            for f in &result.failures {
                eprintln!(
                    "episode failed: scenario={} strategy={} k0={} seed={}: {}",
                    f.scenario, f.strategy, f.k0, f.seed, f.message
                );
            }
            Ok(if result.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::Plot { input, out } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let rows = harness::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", input.display()))?;
            let episodes = harness::rows_to_episodes(&rows);
            harness::write_plot_file(&out, &harness::aggregate(&episodes))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
