use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpisodeResult, StepRecord};
use crate::bayes::EvidenceLevel;
use crate::error::{Error, Result};
use crate::scm::Scenario;
use crate::strategy::StrategyKind;

pub const CSV_HEADER: [&str; 14] = [
    "scenario",
    "strategy",
    "k0",
    "seed",
    "step",
    "x",
    "y",
    "log_bf01",
    "posterior_h0",
    "posterior_h1",
    "posterior_gt",
    "pdc_est",
    "evidence",
    "wall_ms",
];

/// One line of the per-step results file. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scenario: Scenario,
    pub strategy: StrategyKind,
    pub k0: f64,
    pub seed: u64,
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub log_bf01: f64,
    pub posterior_h0: f64,
    pub posterior_h1: f64,
    pub posterior_gt: f64,
    pub pdc_est: f64,
    pub evidence: EvidenceLevel,
    pub wall_ms: f64,
}

impl CsvRow {
    fn new(e: &EpisodeResult, s: &StepRecord) -> Self {
        Self {
            scenario: e.scenario,
            strategy: e.strategy,
            k0: e.k0,
            seed: e.seed,
            step: s.step,
            x: s.x,
            y: s.y,
            log_bf01: s.log_bf01,
            posterior_h0: s.posterior_h0,
            posterior_h1: s.posterior_h1,
            posterior_gt: s.posterior_gt,
            pdc_est: s.pdc_est,
            evidence: s.evidence,
            wall_ms: s.wall_ms,
        }
    }

    pub fn step_record(&self) -> StepRecord {
        StepRecord {
            step: self.step,
            x: self.x,
            y: self.y,
            log_bf01: self.log_bf01,
            posterior_h0: self.posterior_h0,
            posterior_h1: self.posterior_h1,
            posterior_gt: self.posterior_gt,
            pdc_est: self.pdc_est,
            evidence: self.evidence,
            wall_ms: self.wall_ms,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Writes rows ordered by (scenario, strategy, k0, seed, step). The header is
/// always written, so no episodes give a header-only file.
pub fn write_csv<W: Write>(episodes: &[EpisodeResult], out: W) -> Result<()> {
    let mut rows: Vec<CsvRow> = episodes
        .iter()
        .flat_map(|e| e.steps.iter().map(move |s| CsvRow::new(e, s)))
        .collect();
    rows.sort_by(|a, b| {
        (a.scenario, a.strategy, a.k0, a.seed, a.step)
            .partial_cmp(&(b.scenario, b.strategy, b.k0, b.seed, b.step))
            .expect("k0 is finite")
    });
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in &rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn write_csv_file(path: &Path, episodes: &[EpisodeResult]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let file = File::create(path).map_err(io)?;
    let mut buf = BufWriter::new(file);
    write_csv(episodes, &mut buf).map_err(|e| match e {
        Error::Csv(message) => Error::Io {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })?;
    buf.flush().map_err(io)
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Csv(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Regroups rows into episodes keyed by (scenario, strategy, k0, seed).
pub fn rows_to_episodes(rows: &[CsvRow]) -> Vec<EpisodeResult> {
    let mut out: Vec<EpisodeResult> = Vec::new();
    for row in rows {
        let same = out.last().is_some_and(|e| {
            e.scenario == row.scenario && e.strategy == row.strategy && e.k0 == row.k0 && e.seed == row.seed
        });
        if !same {
            out.push(EpisodeResult {
                scenario: row.scenario,
                strategy: row.strategy,
                k0: row.k0,
                seed: row.seed,
                models: None,
                steps: Vec::new(),
            });
        }
        out.last_mut().expect("just pushed").steps.push(row.step_record());
    }
    out
}
