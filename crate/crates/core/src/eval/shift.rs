//! Score distributions with and without supporters/defeaters.
//!
//! Writes into the output directory:
//!
//! - `scores.csv`: `id,base,supporter,defeater,delta_supporter,delta_defeater`
//! - `kde.csv`: `grid,density_base,density_supporter,density_defeater`
//! - `summary.txt`: counts, means, mean deltas, bandwidths, integrals
//! - `shift.svg`: the three density curves overlaid

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::defeasibility::{evaluate_defeasibility, TiePolicy};
use super::{shifted_mean, CausalMetric, EvalError, Result};
use crate::data::DefeasibleInstance;
use crate::numerics::{kde_density, linspace, silverman_bandwidth, DensityCurve};

/// Bandwidth used when Silverman's rule degenerates (a single sample or
/// zero spread).
pub const FALLBACK_BANDWIDTH: f64 = 0.05;
/// Minimum grid size; finer grids are used when a curve is narrow.
pub const GRID_POINTS: usize = 512;
/// Upper bound on the grid size. Bandwidths too narrow to resolve with
/// this many points are raised until they are.
pub const MAX_GRID_POINTS: usize = 8192;
/// Grid points per narrowest bandwidth.
const POINTS_PER_BANDWIDTH: f64 = 4.0;
/// The grid extends this many bandwidths past the extreme scores.
pub const GRID_SPAN: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSummary {
    pub metric: String,
    pub instances: usize,
    pub excluded: usize,
    pub mean_base: f64,
    pub mean_supporter: f64,
    pub mean_defeater: f64,
    pub mean_delta_supporter: f64,
    pub mean_delta_defeater: f64,
    /// Base, supporter, defeater.
    pub bandwidths: [f64; 3],
    pub integrals: [f64; 3],
    pub files: Vec<PathBuf>,
}

fn ensure_writable(dir: &Path) -> Result<()> {
    let fail = |source| EvalError::OutputDir {
        path: dir.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)
}

fn svg(curves: &[DensityCurve; 3], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 48.0;
    let grid = &curves[0].grid;
    let (x0, x1) = (grid[0], grid[grid.len() - 1]);
    let ymax = curves
        .iter()
        .flat_map(|c| c.density.iter().copied())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - y / ymax * (H - 2.0 * M);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        out,
        r#"<line x1="{M}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{M}" y1="{M}" x2="{M}" y2="{0}" stroke="black"/>"#,
        H - M,
        W - M
    );
    let _ = writeln!(
        out,
        r#"<text x="{M}" y="{}" text-anchor="middle">{x0:.3}</text>"#,
        H - M + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{x1:.3}</text>"#,
        W - M,
        H - M + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{ymax:.3}</text>"#,
        M - 4.0,
        M + 4.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">causal strength</text>"#,
        W / 2.0,
        H - 12.0
    );
    let styles = [
        ("base", "#555555"),
        ("supporter", "#1b7837"),
        ("defeater", "#b2182b"),
    ];
    for (k, (curve, (label, color))) in curves.iter().zip(styles).enumerate() {
        let points: Vec<String> = curve
            .grid
            .iter()
            .zip(&curve.density)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = M + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{2}" y="{3}">{label}</text>"#,
            W - M - 110.0,
            W - M - 90.0,
            W - M - 84.0,
            ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scores every instance three ways and writes the report files.
/// `out_dir` is created if needed and checked for writability before
/// anything is scored.
pub fn shift_report(
    metric: &dyn CausalMetric,
    data: &[DefeasibleInstance],
    out_dir: impl AsRef<Path>,
) -> Result<ShiftSummary> {
    let dir = out_dir.as_ref();
    ensure_writable(dir)?;
    let report = evaluate_defeasibility(metric, data, TiePolicy::Strict)?;
    let o = &report.outcomes;
    let samples: [Vec<f64>; 3] = [
        o.iter().map(|x| x.base).collect(),
        o.iter().map(|x| x.supporter).collect(),
        o.iter().map(|x| x.defeater).collect(),
    ];
    let raw = samples
        .each_ref()
        .map(|s| silverman_bandwidth(s).unwrap_or(FALLBACK_BANDWIDTH));
    let min = samples.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let max = samples
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    // k·(range + 2·span·h) is the finest bandwidth the capped grid resolves;
    // dividing by (1 − 2·span·k) keeps that true if the floor itself widens
    // the grid.
    let k = POINTS_PER_BANDWIDTH / (MAX_GRID_POINTS - 1) as f64;
    let widest = raw.iter().copied().fold(0.0, f64::max);
    let floor = k * ((max - min) + 2.0 * GRID_SPAN * widest) / (1.0 - 2.0 * GRID_SPAN * k);
    let bandwidths = raw.map(|h| h.max(floor));
    let widest = bandwidths.iter().copied().fold(0.0, f64::max);
    let lo = min - GRID_SPAN * widest;
    let hi = max + GRID_SPAN * widest;
    let narrowest = bandwidths.iter().copied().fold(f64::INFINITY, f64::min);
    let wanted = ((hi - lo) / narrowest * POINTS_PER_BANDWIDTH).ceil() as usize + 1;
    let grid = linspace(lo, hi, wanted.clamp(GRID_POINTS, MAX_GRID_POINTS));
    let curves = [
        kde_density(&samples[0], bandwidths[0], &grid)?,
        kde_density(&samples[1], bandwidths[1], &grid)?,
        kde_density(&samples[2], bandwidths[2], &grid)?,
    ];

    let mut scores = String::from("id,base,supporter,defeater,delta_supporter,delta_defeater\n");
    for x in o {
        let _ = writeln!(
            scores,
            "{},{},{},{},{},{}",
            x.id,
            x.base,
            x.supporter,
            x.defeater,
            x.delta_supporter(),
            x.delta_defeater()
        );
    }
    let mut kde = String::from("grid,density_base,density_supporter,density_defeater\n");
    for (i, g) in grid.iter().enumerate() {
        let _ = writeln!(
            kde,
            "{g},{},{},{}",
            curves[0].density[i], curves[1].density[i], curves[2].density[i]
        );
    }

    let deltas_s: Vec<f64> = o.iter().map(|x| x.delta_supporter()).collect();
    let deltas_d: Vec<f64> = o.iter().map(|x| x.delta_defeater()).collect();
    let summary = ShiftSummary {
        metric: report.metric.clone(),
        instances: o.len(),
        excluded: report.excluded.len(),
        mean_base: shifted_mean(&samples[0]),
        mean_supporter: shifted_mean(&samples[1]),
        mean_defeater: shifted_mean(&samples[2]),
        mean_delta_supporter: shifted_mean(&deltas_s),
        mean_delta_defeater: shifted_mean(&deltas_d),
        bandwidths,
        integrals: curves.each_ref().map(DensityCurve::integral),
        files: ["scores.csv", "kde.csv", "summary.txt", "shift.svg"]
            .iter()
            .map(|f| dir.join(f))
            .collect(),
    };
    let mut text = String::new();
    let _ = writeln!(text, "metric {}", summary.metric);
    let _ = writeln!(text, "instances {}", summary.instances);
    let _ = writeln!(text, "excluded {}", summary.excluded);
    for e in &report.excluded {
        let _ = writeln!(text, "excluded_id {} {}", e.id, e.error);
    }
    let _ = writeln!(text, "mean_base {}", summary.mean_base);
    let _ = writeln!(text, "mean_supporter {}", summary.mean_supporter);
    let _ = writeln!(text, "mean_defeater {}", summary.mean_defeater);
    let _ = writeln!(text, "mean_delta_supporter {}", summary.mean_delta_supporter);
    let _ = writeln!(text, "mean_delta_defeater {}", summary.mean_delta_defeater);
    let names = ["base", "supporter", "defeater"];
    for (name, h) in names.iter().zip(summary.bandwidths) {
        let _ = writeln!(text, "bandwidth_{name} {h}");
    }
    for (name, v) in names.iter().zip(summary.integrals) {
        let _ = writeln!(text, "integral_{name} {v}");
    }

    fs::write(&summary.files[0], scores)?;
    fs::write(&summary.files[1], kde)?;
    fs::write(&summary.files[2], text)?;
    fs::write(
        &summary.files[3],
        svg(&curves, &format!("{} score distributions", summary.metric)),
    )?;
    Ok(summary)
}
