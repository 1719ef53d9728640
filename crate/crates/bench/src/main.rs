use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bregman_bench::audit::{audit, AuditOptions};
use bregman_bench::csv::trace_to_csv;
use bregman_bench::instance::{gen_instance, Family};
use bregman_bench::manifest::{Algorithm, Params, RunManifest};
use bregman_bench::plot::{emit_plot, load_series, PlotKind};
use bregman_bench::runner::{run_algorithm, run_benchmark};
use bregman_bench::store::{read_instance, write_instance};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bregman-kit", version, about = "Bregman proximal gradient experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance and write it in the binary instance format.
    Gen {
        #[command(flatten)]
        params: Params,
    },
    /// Run one algorithm on one instance and write its trace CSV.
    Run {
        /// Instance file from `gen`; otherwise the instance flags are used.
        instance: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Run a manifest: every algorithm on every replication and grid point.
    Bench {
        /// TOML manifest; flags override its keys.
        manifest: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Plot trace CSVs as an SVG with a log10 y-axis.
    Plot {
        kind: PlotKind,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant checks on generated instances.
    Audit {
        /// All families when omitted.
        #[arg(long)]
        family: Option<Family>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
    },
}

fn single_grid_point(params: &Params) -> Result<()> {
    if params.n.len() > 1 || params.m.len() > 1 {
        bail!("--n and --m take a single value here");
    }
    Ok(())
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Gen { params } => {
            single_grid_point(&params)?;
            let inst = gen_instance(&params.instance_spec()?)?;
            let path = params.out.unwrap_or_else(|| PathBuf::from("instance.bin"));
            let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            write_instance(&mut w, &inst)?;
            w.flush()?;
            eprintln!("wrote {}", path.display());
        }
        Cmd::Run { instance, params } => {
            let inst = match instance {
                Some(path) => {
                    if params.family.is_some() || !params.n.is_empty() || !params.m.is_empty() {
                        bail!("instance flags cannot be combined with an instance file");
                    }
                    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    read_instance(&mut BufReader::new(file))?
                }
                None => {
                    single_grid_point(&params)?;
                    gen_instance(&params.instance_spec()?)?
                }
            };
            let algo = match params.algo.as_slice() {
                [] => Algorithm::Abpg,
                [a] => *a,
                _ => bail!("run takes a single --algo"),
            };
            if !algo.supports(inst.spec.family) {
                bail!("algorithm {algo} does not apply to family {}", inst.spec.family);
            }
            let trace = run_algorithm(&inst, algo, &params.solver_config()?)?;
            write_output(params.out.as_ref(), &trace_to_csv(&trace))?;
            eprintln!(
                "{algo}: {} after {} iterations, psi = {:.6e}",
                trace.status.as_str(),
                trace.iterations(),
                trace.final_psi()
            );
            for w in &trace.warnings {
                eprintln!("warning: {w}");
            }
        }
        Cmd::Bench { manifest, params } => {
            let base = match manifest {
                Some(path) => Params::from_file(&path)?,
                None => Params::default(),
            };
            let manifest = RunManifest::from_params(&base.overridden_by(params))?;
            let report = run_benchmark(&manifest)?;
            eprintln!(
                "{} runs; aggregate in {}",
                report.runs.len(),
                report.aggregate_file.display()
            );
        }
        Cmd::Plot { kind, traces, out } => {
            let svg = emit_plot(&load_series(&traces)?, kind)?;
            write_output(out.as_ref(), &svg)?;
        }
        Cmd::Audit { family, seed, n, m, p } => {
            let d = AuditOptions::default();
            let opts = AuditOptions { n: n.unwrap_or(d.n), m: m.unwrap_or(d.m), p, fault: None };
            let families = family.map_or(Family::ALL.to_vec(), |f| vec![f]);
            let mut ok = true;
            for f in families {
                let report = audit(f, seed, &opts)?;
                println!("{report}");
                ok &= report.passed();
            }
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
