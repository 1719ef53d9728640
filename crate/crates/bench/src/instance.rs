use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use bregman_kit::linalg::{power_iteration, POWER_METHOD_TOL};
use bregman_kit::{CompositeProblem64, Kernel64, Regularizer64, SmoothObjective64};
use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("density must lie in (0, 1], got {0}")]
    Density(f64),
    #[error("p must exceed 1, got {0}")]
    Exponent(f64),
    #[error("{0} must be nonnegative")]
    Negative(&'static str),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error(transparent)]
    Core(#[from] bregman_kit::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `½‖Ax − b‖² + (θ_p/p)‖x‖_p^p`.
    LpLs,
    /// The same objective restricted to `1ᵀx = 1`.
    LpLsEq,
    /// `(1/p)‖Ax − b‖_p^p`.
    LpLoss,
    /// `D_KL(Ax, b) + θ₁‖x‖₁` on `ℝⁿ₊`.
    NonnegKl,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::LpLs, Family::LpLsEq, Family::LpLoss, Family::NonnegKl];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::LpLs => "lp-ls",
            Family::LpLsEq => "lp-ls-eq",
            Family::LpLoss => "lp-loss",
            Family::NonnegKl => "nonneg-kl",
        }
    }

    pub fn default_density(self) -> f64 {
        match self {
            Family::LpLoss => 0.10,
            _ => 0.05,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| SpecError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub theta_p: f64,
    pub theta1: f64,
    pub density: f64,
    pub seed: u64,
}

impl InstanceSpec {
    /// Spec with the family's default density and the experiment parameters
    /// `p = 1.1`, `θ_p = θ₁ = 0.05`.
    pub fn new(family: Family, n: usize, m: usize, seed: u64) -> Self {
        Self { family, n, m, p: 1.1, theta_p: 0.05, theta1: 0.05, density: family.default_density(), seed }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.n == 0 {
            return Err(SpecError::NonPositive("n"));
        }
        if self.m == 0 {
            return Err(SpecError::NonPositive("m"));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(SpecError::Density(self.density));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(SpecError::Exponent(self.p));
        }
        if !(self.theta_p >= 0.0) {
            return Err(SpecError::Negative("theta_p"));
        }
        if !(self.theta1 >= 0.0) {
            return Err(SpecError::Negative("theta1"));
        }
        Ok(())
    }

    /// Number of nonzeros of the ground truth, `⌈density·n⌉`.
    pub fn support_size(&self) -> usize {
        ((self.density * self.n as f64).ceil() as usize).clamp(1, self.n)
    }
}

/// A generated problem together with its start point.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub problem: CompositeProblem64,
    pub x0: Array1<f64>,
    pub x_star: Array1<f64>,
}

fn gaussian_vec(rng: &mut Rng, n: usize) -> Array1<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn gaussian_mat(rng: &mut Rng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((m, n), || StandardNormal.sample(rng))
}

fn sparse_truth(rng: &mut Rng, n: usize, k: usize, nonneg: bool) -> Array1<f64> {
    let mut x = Array1::zeros(n);
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    for i in idx {
        let z: f64 = StandardNormal.sample(rng);
        x[i] = if nonneg { z.abs() } else { z };
    }
    x
}

/// Euclidean projection of `x` onto `{y : aᵀy = γ}`.
pub fn project_onto_hyperplane(x: ArrayView1<f64>, a: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>, SpecError> {
    let aa = a.dot(&a);
    if aa == 0.0 {
        return Err(bregman_kit::Error::DegenerateConstraint.into());
    }
    let shift = (gamma - a.dot(&x)) / aa;
    Ok(&x + &(&a * shift))
}

/// Spectral start for the ℓp loss: the leading eigenvector `v` of
/// `(1/m) Σ b_i² a_i a_iᵀ`, scaled by `s = sqrt(n Σ b_i² / Σ ‖a_i‖²)` with the
/// sign chosen so that `⟨Av, b⟩ ≥ 0`.
pub fn spectral_init(a: &Array2<f64>, b: ArrayView1<f64>, seed: u64) -> Array1<f64> {
    let (m, n) = a.dim();
    let b2 = b.mapv(|v| v * v);
    let (_, v) = power_iteration(
        n,
        |z| a.t().dot(&(&a.dot(&z) * &b2)) / m as f64,
        POWER_METHOD_TOL,
        10_000,
        seed,
    );
    let row_sq: f64 = a.iter().map(|v| v * v).sum();
    let scale = (n as f64 * b2.sum() / row_sq).sqrt();
    let sign = if a.dot(&v).dot(&b) < 0.0 { -1.0 } else { 1.0 };
    v * (sign * scale)
}

/// Ridge weight of the ABPG kernel `f + (κ/2)‖·‖²` for the ℓp loss family.
pub const LP_LOSS_ABPG_KAPPA: f64 = 1.0;

/// Generates the instance of `spec`. The same spec always yields bitwise
/// identical data.
///
/// The ℓp least-squares families draw `A` with i.i.d. `N(0, 1/m)` entries
/// (unit-norm columns in expectation); the ℓp loss uses standard normal `A`;
/// the KL family uses `|N(0, 1)|` entries with columns rescaled to sum to one.
pub fn gen_instance(spec: &InstanceSpec) -> Result<Instance, SpecError> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let (n, m, k) = (spec.n, spec.m, spec.support_size());

    let (a, x_star, x0) = match spec.family {
        Family::LpLs | Family::LpLsEq => {
            let a = gaussian_mat(&mut rng, m, n) / (m as f64).sqrt();
            let x_star = sparse_truth(&mut rng, n, k, false);
            let mut x0 = gaussian_vec(&mut rng, n);
            if spec.family == Family::LpLsEq {
                x0 = project_onto_hyperplane(x0.view(), Array1::ones(n).view(), 1.0)?;
            }
            (a, x_star, x0)
        }
        Family::LpLoss => {
            let a = gaussian_mat(&mut rng, m, n);
            let x_star = sparse_truth(&mut rng, n, k, false);
            let x0 = spectral_init(&a, a.dot(&x_star).view(), spec.seed);
            (a, x_star, x0)
        }
        Family::NonnegKl => {
            let mut a = gaussian_mat(&mut rng, m, n).mapv(f64::abs);
            for mut col in a.columns_mut() {
                let s = col.sum();
                col /= s;
            }
            let x_star = sparse_truth(&mut rng, n, k, true);
            // Flat start carrying the data's mass: columns sum to one, so
            // 1ᵀA x0 = 1ᵀb.
            let x0 = Array1::from_elem(n, a.dot(&x_star).sum() / n as f64);
            (a, x_star, x0)
        }
    };
    let b = a.dot(&x_star);
    assemble(spec, a, b, x0, x_star)
}

/// Builds the composite problem of `spec.family` around given data.
pub fn assemble(
    spec: &InstanceSpec,
    a: Array2<f64>,
    b: Array1<f64>,
    x0: Array1<f64>,
    x_star: Array1<f64>,
) -> Result<Instance, SpecError> {
    spec.validate()?;
    let n = spec.n;
    if a.dim() != (spec.m, n) {
        return Err(bregman_kit::Error::DimensionMismatch { expected: spec.m * n, got: a.len() }.into());
    }
    for len in [x0.len(), x_star.len()] {
        if len != n {
            return Err(bregman_kit::Error::DimensionMismatch { expected: n, got: len }.into());
        }
    }
    let p = spec.p;
    let problem = match spec.family {
        Family::LpLs | Family::LpLsEq => {
            let f = Arc::new(SmoothObjective64::lp_least_squares(a, b, spec.theta_p, p)?);
            let g = if spec.family == Family::LpLsEq {
                Regularizer64::affine_equality(Array1::ones(n), 1.0)?
            } else {
                Regularizer64::Zero
            };
            CompositeProblem64::new(f, g, Kernel64::lp_composite(p)?)?
        }
        Family::LpLoss => {
            let f = Arc::new(SmoothObjective64::lp_loss(a, b, p)?);
            let kernel = Kernel64::f_plus_ridge(f.clone(), LP_LOSS_ABPG_KAPPA)?;
            CompositeProblem64::new(f, Regularizer64::Zero, kernel)?
        }
        Family::NonnegKl => {
            let f = Arc::new(SmoothObjective64::kl_linear(a, b)?);
            let g = Regularizer64::l1_nonneg(spec.theta1)?;
            CompositeProblem64::new(f, g, Kernel64::entropy_ridge())?
        }
    };
    let problem = problem.with_ground_truth(x_star.clone())?;
    Ok(Instance { spec: spec.clone(), problem, x0, x_star })
}

impl Instance {
    pub fn a(&self) -> &Array2<f64> {
        self.problem.f.matrix()
    }

    pub fn b(&self) -> &Array1<f64> {
        self.problem.f.data()
    }
}
