//! Run manifests.
//!
//! A manifest file is TOML whose keys are exactly the long CLI flags
//! without the leading dashes:
//!
//! ```toml
//! family = "lp-ls"
//! algo = ["abpg", "pg", "pgl", "rn"]   # or a single string
//! n = [100, 200]                       # or a single integer
//! m = 1000
//! p = 1.1
//! theta-p = 0.05
//! theta1 = 0.05
//! lambda = 1.0                         # omit for 1/L
//! alpha = 0.99
//! eta = 0.9
//! kappa = 1e-5
//! seed = 0                             # at most 2^63 - 1 in TOML
//! reps = 10
//! max-iter = 1000
//! tol = 1e-6
//! out = "results"
//! ```
//!
//! Unknown keys are errors. Flags given on the command line override the
//! file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bregman_kit::SolverConfig64;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::instance::{Family, InstanceSpec, SpecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Abpg,
    Pg,
    Pgl,
    Rn,
    Bpg,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Abpg => "abpg",
            Algorithm::Pg => "pg",
            Algorithm::Pgl => "pgl",
            Algorithm::Rn => "rn",
            Algorithm::Bpg => "bpg",
        }
    }

    /// The comparison set used for each family.
    pub fn defaults_for(family: Family) -> Vec<Algorithm> {
        use Algorithm::*;
        match family {
            Family::NonnegKl => vec![Abpg, Bpg, Pgl, Pg],
            _ => vec![Abpg, Pg, Pgl, Rn],
        }
    }

    pub fn supports(self, family: Family) -> bool {
        self != Algorithm::Bpg || family == Family::NonnegKl
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Algorithm as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("reading manifest {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing manifest: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("algorithm {0} does not apply to family {1}")]
    Unsupported(Algorithm, Family),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Config(#[from] bregman_kit::Error),
}

fn one_or_many<'de, D, T>(de: D) -> Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Every experiment parameter, as flags or manifest keys. Unset fields fall
/// back to the family defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    #[arg(long)]
    pub family: Option<Family>,
    /// Algorithms, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub algo: Vec<Algorithm>,
    /// Problem dimensions, comma separated for a grid.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    /// Numbers of measurements, comma separated for a grid.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub m: Vec<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long = "theta-p")]
    pub theta_p: Option<f64>,
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl clap::ValueEnum for Family {
    fn value_variants<'a>() -> &'a [Self] {
        &Family::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

impl Params {
    pub fn from_toml(text: &str) -> Result<Self, ManifestError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ManifestError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    /// `self` with every field set in `over` replaced.
    pub fn overridden_by(self, over: Params) -> Params {
        fn pick<T>(base: Option<T>, over: Option<T>) -> Option<T> {
            over.or(base)
        }
        fn pick_vec<T>(base: Vec<T>, over: Vec<T>) -> Vec<T> {
            if over.is_empty() {
                base
            } else {
                over
            }
        }
        Params {
            family: pick(self.family, over.family),
            algo: pick_vec(self.algo, over.algo),
            n: pick_vec(self.n, over.n),
            m: pick_vec(self.m, over.m),
            p: pick(self.p, over.p),
            theta_p: pick(self.theta_p, over.theta_p),
            theta1: pick(self.theta1, over.theta1),
            lambda: pick(self.lambda, over.lambda),
            alpha: pick(self.alpha, over.alpha),
            eta: pick(self.eta, over.eta),
            kappa: pick(self.kappa, over.kappa),
            seed: pick(self.seed, over.seed),
            reps: pick(self.reps, over.reps),
            max_iter: pick(self.max_iter, over.max_iter),
            tol: pick(self.tol, over.tol),
            out: pick(self.out, over.out),
        }
    }

    /// Instance spec for the first grid point.
    pub fn instance_spec(&self) -> Result<InstanceSpec, ManifestError> {
        let family = self.family.ok_or(ManifestError::Missing("family"))?;
        let n = *self.n.first().ok_or(ManifestError::Missing("n"))?;
        let m = *self.m.first().ok_or(ManifestError::Missing("m"))?;
        let mut spec = InstanceSpec::new(family, n, m, self.seed.unwrap_or(0));
        if let Some(p) = self.p {
            spec.p = p;
        }
        if let Some(t) = self.theta_p {
            spec.theta_p = t;
        }
        if let Some(t) = self.theta1 {
            spec.theta1 = t;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn solver_config(&self) -> Result<SolverConfig64, ManifestError> {
        let d = SolverConfig64::default();
        let cfg = SolverConfig64 {
            lambda: self.lambda,
            alpha: self.alpha.unwrap_or(d.alpha),
            eta: self.eta.unwrap_or(d.eta),
            kappa: self.kappa.unwrap_or(d.kappa),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol.unwrap_or(d.tol),
            seed: self.seed.unwrap_or(0),
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn algorithms(&self, family: Family) -> Result<Vec<Algorithm>, ManifestError> {
        let algos = if self.algo.is_empty() { Algorithm::defaults_for(family) } else { self.algo.clone() };
        match algos.iter().find(|a| !a.supports(family)) {
            Some(&a) => Err(ManifestError::Unsupported(a, family)),
            None => Ok(algos),
        }
    }
}

/// A validated benchmark description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    /// Template instance; `n`, `m` and `seed` vary over the grid and
    /// replications.
    pub instance: InstanceSpec,
    /// `(m, n)` grid points, every `m` with every `n`.
    pub grid: Vec<(usize, usize)>,
    pub algorithms: Vec<Algorithm>,
    pub config: SolverConfig64,
    pub out: PathBuf,
    /// Replications per grid point. Replication `r` uses the seed
    /// `replication_seed(seed, r)`.
    pub reps: usize,
}

impl RunManifest {
    pub fn from_params(params: &Params) -> Result<Self, ManifestError> {
        let instance = params.instance_spec()?;
        let reps = params.reps.unwrap_or(1);
        if reps == 0 {
            return Err(ManifestError::Zero("reps"));
        }
        let mut grid = Vec::new();
        for &m in &params.m {
            for &n in &params.n {
                InstanceSpec { m, n, ..instance.clone() }.validate()?;
                grid.push((m, n));
            }
        }
        Ok(Self {
            algorithms: params.algorithms(instance.family)?,
            config: params.solver_config()?,
            out: params.out.clone().unwrap_or_else(|| PathBuf::from("results")),
            instance,
            grid,
            reps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
family = "lp-ls"
algo = ["abpg", "pg"]
n = [100, 200]
m = 1000
p = 1.1
theta-p = 0.05
theta1 = 0.05
lambda = 2.0
alpha = 0.5
eta = 0.8
kappa = 1e-4
seed = 9
reps = 3
max-iter = 50
tol = 1e-7
out = "res"
"#;

    #[test]
    fn full_manifest_parses() {
        let p = Params::from_toml(FULL).unwrap();
        let man = RunManifest::from_params(&p).unwrap();
        assert_eq!(man.grid, vec![(1000, 100), (1000, 200)]);
        assert_eq!(man.algorithms, vec![Algorithm::Abpg, Algorithm::Pg]);
        assert_eq!(man.config.lambda, Some(2.0));
        assert_eq!(man.config.max_iter, 50);
        assert_eq!(man.reps, 3);
        assert_eq!(man.instance.seed, 9);
        assert_eq!(man.out, PathBuf::from("res"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Params::from_toml("family = \"lp-ls\"\nbogus = 1\n").is_err());
        assert!(Params::from_toml("max_iter = 3\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = Params::from_toml(FULL).unwrap();
        let flags = Params { n: vec![50], reps: Some(1), ..Default::default() };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.n, vec![50]);
        assert_eq!(merged.reps, Some(1));
        assert_eq!(merged.m, vec![1000]);
    }

    #[test]
    fn family_defaults_and_support() {
        let p = Params { family: Some(Family::NonnegKl), n: vec![5], m: vec![5], ..Default::default() };
        assert_eq!(RunManifest::from_params(&p).unwrap().algorithms[1], Algorithm::Bpg);
        let p = Params { family: Some(Family::LpLs), algo: vec![Algorithm::Bpg], ..p };
        assert!(matches!(RunManifest::from_params(&p), Err(ManifestError::Unsupported(..))));
        let p = Params { algo: vec![], reps: Some(0), ..p };
        assert!(matches!(RunManifest::from_params(&p), Err(ManifestError::Zero("reps"))));
    }
}
