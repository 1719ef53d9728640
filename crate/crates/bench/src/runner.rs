//! Benchmark orchestration: replications in parallel, files written by one
//! thread afterwards.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use bregman_kit::{abpg_solve, bpg_solve, pg_solve, pgl_solve, rn_solve, IterateTrace64, SolverConfig64, Status};
use rayon::prelude::*;
use thiserror::Error;

use crate::csv::{fmt_f64, trace_to_csv};
use crate::instance::{gen_instance, Instance, InstanceSpec, SpecError};
use crate::manifest::{Algorithm, RunManifest};
use crate::rng::replication_seed;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BREGMAN_KIT_THREADS";
/// Final objectives above this render as the `---` sentinel.
pub const SENTINEL_THRESHOLD: f64 = 1e8;
pub const SENTINEL: &str = "---";

pub const AGGREGATE_HEADER: &str = "m,n,algorithm,iteration,obj,acc,best";
pub const RUNS_HEADER: &str = "m,n,rep,seed,algorithm,status,iterations,obj,acc";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("instance m={m} n={n} rep={rep}: {source}")]
    Instance { m: usize, n: usize, rep: usize, source: SpecError },
    #[error("{algo} on m={m} n={n} rep={rep}: {source}")]
    Solver { algo: Algorithm, m: usize, n: usize, rep: usize, source: bregman_kit::Error },
    #[error("invalid {THREADS_ENV} value `{0}`")]
    Threads(String),
    #[error("building thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub fn run_algorithm(inst: &Instance, algo: Algorithm, cfg: &SolverConfig64) -> bregman_kit::Result<IterateTrace64> {
    let (p, x0) = (&inst.problem, inst.x0.view());
    match algo {
        Algorithm::Abpg => abpg_solve(p, cfg, x0),
        Algorithm::Pg => pg_solve(p, cfg, x0),
        Algorithm::Pgl => pgl_solve(p, cfg, x0),
        Algorithm::Rn => rn_solve(p, cfg, x0),
        Algorithm::Bpg => bpg_solve(p, cfg, x0),
    }
}

/// Final values of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub m: usize,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub status: Status,
    pub iterations: usize,
    pub obj: f64,
    pub acc: Option<f64>,
}

/// Mean finals of one `(m, n, algorithm)` group. `obj`/`acc` are `None`
/// when some run's final objective exceeded [`SENTINEL_THRESHOLD`] or was
/// not finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub m: usize,
    pub n: usize,
    pub algorithm: Algorithm,
    pub iteration: f64,
    pub obj: Option<f64>,
    pub acc: Option<f64>,
    pub best_iteration: bool,
    pub best_obj: bool,
    pub best_acc: bool,
}

impl AggregateRow {
    /// `best` column: the columns this row is smallest in, `;` separated.
    pub fn best_marker(&self) -> String {
        [(self.best_iteration, "iteration"), (self.best_obj, "obj"), (self.best_acc, "acc")]
            .iter()
            .filter(|(b, _)| *b)
            .map(|(_, name)| *name)
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub trace_files: Vec<PathBuf>,
    pub runs_file: PathBuf,
    pub aggregate_file: PathBuf,
    pub runs: Vec<RunSummary>,
    pub aggregate: Vec<AggregateRow>,
}

/// Worker count from [`THREADS_ENV`]; `None` leaves rayon's default.
pub fn thread_cap() -> Result<Option<usize>, RunError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(RunError::Threads(v)),
        },
    }
}

pub fn trace_file_name(spec: &InstanceSpec, rep: usize, algo: Algorithm) -> String {
    format!("{}_m{}_n{}_r{:03}_{}.csv", spec.family, spec.m, spec.n, rep, algo)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| SENTINEL.to_string())
}

fn fmt_acc(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// Groups finals by `(m, n, algorithm)` in first-appearance order and marks
/// the per-`(m, n)` minima.
pub fn aggregate(runs: &[RunSummary]) -> Vec<AggregateRow> {
    let mut keys: Vec<(usize, usize, Algorithm)> = Vec::new();
    for r in runs {
        let key = (r.m, r.n, r.algorithm);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut rows: Vec<AggregateRow> = keys
        .iter()
        .map(|&(m, n, algorithm)| {
            let group: Vec<&RunSummary> =
                runs.iter().filter(|r| (r.m, r.n, r.algorithm) == (m, n, algorithm)).collect();
            let blown = group.iter().any(|r| !r.obj.is_finite() || r.obj > SENTINEL_THRESHOLD);
            let acc = if blown || group.iter().any(|r| r.acc.map_or(true, |a| !a.is_finite())) {
                None
            } else {
                Some(mean(group.iter().map(|r| r.acc.unwrap_or_default())))
            };
            AggregateRow {
                m,
                n,
                algorithm,
                iteration: mean(group.iter().map(|r| r.iterations as f64)),
                obj: (!blown).then(|| mean(group.iter().map(|r| r.obj))),
                acc,
                best_iteration: false,
                best_obj: false,
                best_acc: false,
            }
        })
        .collect();

    let min_of = |rows: &[AggregateRow], m, n, get: &dyn Fn(&AggregateRow) -> Option<f64>| {
        rows.iter().filter(|r| (r.m, r.n) == (m, n)).filter_map(get).fold(f64::INFINITY, f64::min)
    };
    for i in 0..rows.len() {
        let (m, n) = (rows[i].m, rows[i].n);
        let it = min_of(&rows, m, n, &|r| Some(r.iteration));
        let obj = min_of(&rows, m, n, &|r| r.obj);
        let acc = min_of(&rows, m, n, &|r| r.acc);
        let row = &mut rows[i];
        row.best_iteration = row.iteration == it;
        row.best_obj = row.obj == Some(obj);
        row.best_acc = row.acc == Some(acc);
    }
    rows
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.m,
            r.n,
            r.algorithm,
            fmt_f64(r.iteration),
            fmt_opt(r.obj),
            if r.obj.is_none() { SENTINEL.to_string() } else { fmt_acc(r.acc) },
            r.best_marker()
        ));
    }
    out
}

pub fn runs_csv(runs: &[RunSummary]) -> String {
    let mut out = format!("{RUNS_HEADER}\n");
    for r in runs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.m,
            r.n,
            r.rep,
            r.seed,
            r.algorithm,
            r.status.as_str(),
            r.iterations,
            fmt_f64(r.obj),
            fmt_acc(r.acc)
        ));
    }
    out
}

struct Job {
    spec: InstanceSpec,
    rep: usize,
}

type JobOutput = Result<Vec<(RunSummary, String)>, RunError>;

fn run_job(job: &Job, manifest: &RunManifest) -> JobOutput {
    let (m, n, rep) = (job.spec.m, job.spec.n, job.rep);
    let inst = gen_instance(&job.spec).map_err(|source| RunError::Instance { m, n, rep, source })?;
    manifest
        .algorithms
        .iter()
        .map(|&algo| {
            let trace = run_algorithm(&inst, algo, &manifest.config)
                .map_err(|source| RunError::Solver { algo, m, n, rep, source })?;
            let summary = RunSummary {
                m,
                n,
                rep,
                seed: job.spec.seed,
                algorithm: algo,
                status: trace.status,
                iterations: trace.iterations(),
                obj: trace.final_psi(),
                acc: trace.final_accuracy(),
            };
            Ok((summary, trace_to_csv(&trace)))
        })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Runs every algorithm on every replication of every grid point.
///
/// Writes `traces/<family>_m<m>_n<n>_r<rep>_<algo>.csv`, `runs.csv` (one
/// line per run) and `aggregate.csv` under `manifest.out`. Solver statuses
/// never abort the benchmark; if an instance or solver call errors, the
/// results of the other jobs are still written before the error is returned.
pub fn run_benchmark(manifest: &RunManifest) -> Result<BenchReport, RunError> {
    let jobs: Vec<Job> = manifest
        .grid
        .iter()
        .flat_map(|&(m, n)| {
            (0..manifest.reps).map(move |rep| Job {
                spec: InstanceSpec {
                    m,
                    n,
                    seed: replication_seed(manifest.instance.seed, rep),
                    ..manifest.instance.clone()
                },
                rep,
            })
        })
        .collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = thread_cap()? {
        pool = pool.num_threads(k);
    }
    let outputs: Vec<JobOutput> = pool.build()?.install(|| jobs.par_iter().map(|j| run_job(j, manifest)).collect());

    let trace_dir = manifest.out.join("traces");
    fs::create_dir_all(&trace_dir).map_err(|source| RunError::Io { path: trace_dir.clone(), source })?;
    let mut runs = Vec::new();
    let mut trace_files = Vec::new();
    let mut first_error = None;
    for (job, output) in jobs.iter().zip(outputs) {
        match output {
            Ok(results) => {
                for (summary, csv) in results {
                    let path = trace_dir.join(trace_file_name(&job.spec, job.rep, summary.algorithm));
                    write(&path, &csv)?;
                    trace_files.push(path);
                    runs.push(summary);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let runs_file = manifest.out.join("runs.csv");
    write(&runs_file, &runs_csv(&runs))?;
    let rows = aggregate(&runs);
    let aggregate_file = manifest.out.join("aggregate.csv");
    write(&aggregate_file, &aggregate_csv(&rows))?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(BenchReport { trace_files, runs_file, aggregate_file, runs, aggregate: rows }),
    }
}
