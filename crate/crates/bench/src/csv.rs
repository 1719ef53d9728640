//! Trace CSV files.
//!
//! Header `k,psi,step_norm,dir_norm,t,backtracks,accuracy,ms`. Row `k = 0`
//! holds the start point (zero step columns). Floats are written with 17
//! significant digits, so a parse recovers the exact `f64`. The accuracy
//! field is empty when the instance has no ground truth. `ms` is the only
//! wall-clock column.

use std::fmt::Write as _;
use std::num::{ParseFloatError, ParseIntError};

use bregman_kit::IterateTrace64;
use thiserror::Error;

pub const HEADER: &str = "k,psi,step_norm,dir_norm,t,backtracks,accuracy,ms";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("bad header `{0}`")]
    Header(String),
    #[error("line {line}: expected 8 fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}: {source}")]
    Float { line: usize, source: ParseFloatError },
    #[error("line {line}: {source}")]
    Int { line: usize, source: ParseIntError },
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub psi: f64,
    pub step_norm: f64,
    pub dir_norm: f64,
    pub t: f64,
    pub backtracks: usize,
    pub accuracy: Option<f64>,
    pub ms: f64,
}

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, r: &TraceRow) {
    let acc = r.accuracy.map(fmt_f64).unwrap_or_default();
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        r.k,
        fmt_f64(r.psi),
        fmt_f64(r.step_norm),
        fmt_f64(r.dir_norm),
        fmt_f64(r.t),
        r.backtracks,
        acc,
        fmt_f64(r.ms)
    )
    .expect("writing to a String");
}

pub fn trace_rows(trace: &IterateTrace64) -> Vec<TraceRow> {
    let start = TraceRow {
        k: 0,
        psi: trace.initial_psi,
        step_norm: 0.0,
        dir_norm: 0.0,
        t: 0.0,
        backtracks: 0,
        accuracy: trace.initial_accuracy,
        ms: 0.0,
    };
    std::iter::once(start)
        .chain(trace.records.iter().map(|r| TraceRow {
            k: r.k,
            psi: r.psi,
            step_norm: r.step_norm,
            dir_norm: r.direction_norm,
            t: r.t,
            backtracks: r.backtracks,
            accuracy: r.accuracy,
            ms: r.wall_ms,
        }))
        .collect()
}

pub fn rows_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        push_row(&mut out, r);
    }
    out
}

pub fn trace_to_csv(trace: &IterateTrace64) -> String {
    rows_to_csv(&trace_rows(trace))
}

pub fn parse_csv(text: &str) -> Result<Vec<TraceRow>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != HEADER {
        return Err(CsvError::Header(header.to_string()));
    }
    let mut rows = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 8 {
            return Err(CsvError::FieldCount { line, got: fields.len() });
        }
        let float = |s: &str| s.parse::<f64>().map_err(|source| CsvError::Float { line, source });
        let int = |s: &str| s.parse::<usize>().map_err(|source| CsvError::Int { line, source });
        rows.push(TraceRow {
            k: int(fields[0])?,
            psi: float(fields[1])?,
            step_norm: float(fields[2])?,
            dir_norm: float(fields[3])?,
            t: float(fields[4])?,
            backtracks: int(fields[5])?,
            accuracy: if fields[6].is_empty() { None } else { Some(float(fields[6])?) },
            ms: float(fields[7])?,
        });
    }
    Ok(rows)
}

/// The CSV without its `ms` column, for byte comparisons across runs.
pub fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
