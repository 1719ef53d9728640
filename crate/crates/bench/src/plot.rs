//! SVG line charts of traces on a log10 y-axis.
//!
//! The root element carries the axis transform so plots can be read back:
//! `data-plot-area="left top width height"`, `data-y-log10="lo hi"` and
//! `data-k-max="K"`. A value `v` at iteration `k` is drawn at
//! `x = left + width·k/K`, `y = top + height·(hi − log10 v)/(hi − lo)`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use thiserror::Error;

use crate::csv::{parse_csv, CsvError, TraceRow};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const TOP: f64 = 30.0;
const PLOT_W: f64 = 540.0;
const PLOT_H: f64 = 410.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Objective,
    Accuracy,
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <PlotKind as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("trace `{0}` has no plottable {1:?} values")]
    EmptyTrace(String, PlotKind),
    #[error("no traces given")]
    NoTraces,
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Csv { path: PathBuf, source: CsvError },
}

/// One labelled trace.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub rows: Vec<TraceRow>,
}

/// Label from a trace file name: the part after the last `_`
/// (`lp-ls_m800_n500_r000_abpg.csv` → `abpg`).
pub fn label_for(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    stem.rsplit('_').next().unwrap_or(stem).to_string()
}

pub fn load_series(paths: &[PathBuf]) -> Result<Vec<Series>, PlotError> {
    paths
        .iter()
        .map(|path| {
            let text =
                std::fs::read_to_string(path).map_err(|source| PlotError::Io { path: path.clone(), source })?;
            let rows = parse_csv(&text).map_err(|source| PlotError::Csv { path: path.clone(), source })?;
            Ok(Series { label: label_for(path), rows })
        })
        .collect()
}

/// `(k, log10 value)` points; nonpositive and non-finite values are skipped.
fn points(series: &Series, kind: PlotKind) -> Vec<(f64, f64)> {
    series
        .rows
        .iter()
        .filter_map(|r| {
            let v = match kind {
                PlotKind::Objective => Some(r.psi),
                PlotKind::Accuracy => r.accuracy,
            }?;
            (v > 0.0 && v.is_finite()).then(|| (r.k as f64, v.log10()))
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn emit_plot(series: &[Series], kind: PlotKind) -> Result<String, PlotError> {
    if series.is_empty() {
        return Err(PlotError::NoTraces);
    }
    let pts: Vec<Vec<(f64, f64)>> = series.iter().map(|s| points(s, kind)).collect();
    if let Some(i) = pts.iter().position(Vec::is_empty) {
        return Err(PlotError::EmptyTrace(series[i].label.clone(), kind));
    }
    let all = pts.iter().flatten();
    let k_max = all.clone().map(|p| p.0).fold(0.0, f64::max).max(1.0);
    let mut lo = all.clone().map(|p| p.1).fold(f64::INFINITY, f64::min).floor();
    let mut hi = all.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil();
    if hi <= lo {
        lo -= 1.0;
        hi += 1.0;
    }
    let px = |k: f64| LEFT + PLOT_W * k / k_max;
    let py = |y: f64| TOP + PLOT_H * (hi - y) / (hi - lo);

    let mut svg = String::new();
    let w = &mut svg;
    let title = match kind {
        PlotKind::Objective => "objective",
        PlotKind::Accuracy => "accuracy",
    };
    // Writing into a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" data-plot-area="{LEFT} {TOP} {PLOT_W} {PLOT_H}" data-y-log10="{lo} {hi}" data-k-max="{k_max}">"#
    );
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
    );
    let decades = (hi - lo) as i64;
    let step = (decades / 10).max(1);
    for e in (lo as i64..=hi as i64).step_by(step as usize) {
        let y = py(e as f64);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="#dddddd"/><text x="{:.3}" y="{:.3}" font-size="12" text-anchor="end">1e{e}</text>"##,
            LEFT + PLOT_W,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=5 {
        let k = (k_max * i as f64 / 5.0).round();
        let _ = writeln!(
            w,
            r#"<text x="{:.3}" y="{:.3}" font-size="12" text-anchor="middle">{k}</text>"#,
            px(k),
            TOP + PLOT_H + 18.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.3}" y="{:.3}" font-size="13" text-anchor="middle">iteration</text>"#,
        LEFT + PLOT_W / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.3}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.3})">{title} (log10)</text>"#,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0
    );
    for (i, (s, p)) in series.iter().zip(&pts).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = p.iter().map(|&(k, y)| format!("{:.6},{:.6}", px(k), py(y))).collect();
        let label = escape(&s.label);
        let _ = writeln!(
            w,
            r#"<polyline data-label="{label}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 20.0 * i as f64 + 10.0;
        let lx = LEFT + PLOT_W + 20.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="12">{label}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, psi: f64, accuracy: Option<f64>) -> TraceRow {
        TraceRow { k, psi, step_norm: 0.0, dir_norm: 0.0, t: 1.0, backtracks: 0, accuracy, ms: 0.0 }
    }

    #[test]
    fn labels_come_from_file_names() {
        assert_eq!(label_for(Path::new("out/lp-ls_m8_n5_r000_abpg.csv")), "abpg");
        assert_eq!(label_for(Path::new("plain.csv")), "plain");
    }

    #[test]
    fn missing_accuracy_is_an_empty_trace() {
        let s = Series { label: "pg".into(), rows: vec![row(0, 1.0, None), row(1, 0.5, None)] };
        assert!(emit_plot(std::slice::from_ref(&s), PlotKind::Objective).is_ok());
        assert!(matches!(emit_plot(&[s], PlotKind::Accuracy), Err(PlotError::EmptyTrace(l, _)) if l == "pg"));
        assert!(matches!(emit_plot(&[], PlotKind::Objective), Err(PlotError::NoTraces)));
    }

    #[test]
    fn markup_is_escaped() {
        let s = Series { label: "a<b".into(), rows: vec![row(0, 1.0, None)] };
        let svg = emit_plot(&[s], PlotKind::Objective).unwrap();
        assert!(svg.contains("a&lt;b") && !svg.contains("a<b"));
    }
}
