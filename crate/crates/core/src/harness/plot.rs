//! SVG rendering of aggregated learning curves: one row of panels per
//! (scenario, k0), one panel per metric, a mean line and ±1 sd band per
//! strategy.

use std::fmt::Write as _;
use std::path::Path;

use super::AggregateRow;
use crate::error::{Error, Result};
use crate::scm::Scenario;
use crate::strategy::StrategyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    PdcEst,
    LogBf01,
    PosteriorGt,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::PdcEst, Metric::LogBf01, Metric::PosteriorGt];

    fn label(self) -> &'static str {
        match self {
            Metric::PdcEst => "P_DC",
            Metric::LogBf01 => "log BF01",
            Metric::PosteriorGt => "P(H_gt | D_int)",
        }
    }

    pub fn mean_std(self, row: &AggregateRow) -> (f64, f64) {
        match self {
            Metric::PdcEst => (row.pdc_est_mean, row.pdc_est_std),
            Metric::LogBf01 => (row.log_bf01_mean, row.log_bf01_std),
            Metric::PosteriorGt => (row.posterior_gt_mean, row.posterior_gt_std),
        }
    }
}

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 45.0;

fn colour(s: StrategyKind) -> &'static str {
    match s {
        StrategyKind::PdcMax => "#d62728",
        StrategyKind::InfoGain => "#1f77b4",
        StrategyKind::Random => "#2ca02c",
    }
}

pub fn render_svg(rows: &[AggregateRow]) -> String {
    let mut panels: Vec<(Scenario, f64)> = Vec::new();
    for r in rows {
        if !panels.iter().any(|(s, k)| *s == r.scenario && *k == r.k0) {
            panels.push((r.scenario, r.k0));
        }
    }
    panels.sort_by(|a, b| a.partial_cmp(b).expect("finite k0"));

    let cell_w = PANEL_W + 2.0 * MARGIN;
    let cell_h = PANEL_H + 2.0 * MARGIN;
    let width = cell_w * Metric::ALL.len() as f64;
    let height = cell_h * panels.len().max(1) as f64 + 30.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (row_idx, (scenario, k0)) in panels.iter().enumerate() {
        for (col_idx, metric) in Metric::ALL.iter().enumerate() {
            let ox = col_idx as f64 * cell_w + MARGIN;
            let oy = row_idx as f64 * cell_h + MARGIN;
            let series: Vec<&AggregateRow> = rows
                .iter()
                .filter(|r| r.scenario == *scenario && r.k0 == *k0)
                .collect();
            draw_panel(&mut svg, ox, oy, *metric, &series, &format!("{scenario}, k0 = {k0}"));
        }
    }

    let ly = height - 15.0;
    for (i, s) in StrategyKind::ALL.iter().enumerate() {
        let lx = MARGIN + i as f64 * 110.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            colour(*s),
            lx + 25.0,
            ly + 4.0,
            s.name()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn draw_panel(svg: &mut String, ox: f64, oy: f64, metric: Metric, rows: &[&AggregateRow], title: &str) {
    let max_step = rows.iter().map(|r| r.step).max().unwrap_or(1).max(1) as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        let (m, s) = metric.mean_std(r);
        lo = lo.min(m - s);
        hi = hi.max(m + s);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let sx = |step: f64| ox + PANEL_W * (step - 1.0) / (max_step - 1.0).max(1.0);
    let sy = |v: f64| oy + PANEL_H * (1.0 - (v - lo) / (hi - lo));

    let _ = writeln!(
        svg,
        r#"<rect x="{ox}" y="{oy}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="grey"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{ox}" y="{}">{} ({title})</text>"#, oy - 8.0, metric.label());
    for frac in [0.0, 0.5, 1.0] {
        let v = lo + frac * (hi - lo);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
            ox - 4.0,
            sy(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">step (max {max_step})</text>"#,
        ox + PANEL_W / 2.0,
        oy + PANEL_H + 18.0
    );

    for strategy in StrategyKind::ALL {
        let pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter(|r| r.strategy == strategy)
            .map(|r| {
                let (m, s) = metric.mean_std(r);
                (r.step as f64, m, s)
            })
            .collect();
        if pts.is_empty() {
            continue;
        }
        let mut band = String::new();
        for (x, m, s) in &pts {
            let _ = write!(band, "{:.2},{:.2} ", sx(*x), sy(m + s));
        }
        for (x, m, s) in pts.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", sx(*x), sy(m - s));
        }
        let line: String = pts
            .iter()
            .map(|(x, m, _)| format!("{:.2},{:.2}", sx(*x), sy(*m)))
            .collect::<Vec<_>>()
            .join(" ");
        let c = colour(strategy);
        let _ = writeln!(svg, r#"<polygon points="{}" fill="{c}" fill-opacity="0.18" stroke="none"/>"#, band.trim_end());
        let _ = writeln!(svg, r#"<polyline points="{line}" fill="none" stroke="{c}" stroke-width="1.5"/>"#);
    }
}

pub fn write_plot_file(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    std::fs::write(path, render_svg(rows)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
