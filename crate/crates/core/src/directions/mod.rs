//! Search directions: closed-form minimizers of the ABPG subproblem
//!
//! ```text
//! min_d ⟨∇f(x), d⟩ + g(x + d) + (1/2λ)⟨∇²φ(x) d, d⟩   s.t. x + d ∈ cl C
//! ```
//!
//! for the separable and single-constraint cases, the entropy BPG update, and
//! a derivative-free oracle used to cross-check them.

mod closed_form;
mod oracle;

pub use closed_form::*;
pub use oracle::{brute_force_direction, OracleConfig};

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::kernels::Curvature;
use crate::objectives::{CompositeProblem, Regularizer};
use crate::scalar::Real;

/// Factors of the bordered KKT system for one affine constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineKktFactors<F> {
    /// `∇²φ(x)⁻¹ a`.
    pub u: Array1<F>,
    /// `−aᵀ∇²φ(x)⁻¹ a`; negative for a positive definite Hessian.
    pub delta: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionResult<F> {
    pub d: Array1<F>,
    /// Model decrease `⟨∇f(x), d⟩ + g(x + d) − g(x)`.
    pub rho: F,
    /// Multiplier of the equality constraint, when there is one.
    pub mu: Option<F>,
    /// Per-coordinate scales `λ/h_i` of the diagonal solvers.
    pub scales: Option<Array1<F>>,
    pub kkt: Option<AffineKktFactors<F>>,
}

impl<F: Real> DirectionResult<F> {
    fn plain(d: Array1<F>, rho: F) -> Self {
        Self { d, rho, mu: None, scales: None, kkt: None }
    }

    /// `−(1/2λ)⟨Hd, d⟩ − ρ`; nonnegative for an exact subproblem minimizer.
    pub fn model_decrease_slack(&self, curvature: &Curvature<F>, lambda: F) -> F {
        -curvature.quad_form(self.d.view()) / (F::lit(2.0) * lambda) - self.rho
    }
}

/// Solves the direction subproblem for a given curvature and regularizer.
pub fn solve_with_curvature<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    curvature: &Curvature<F>,
    g: &Regularizer<F>,
    x: ArrayView1<F>,
) -> Result<DirectionResult<F>> {
    match (curvature, g) {
        (Curvature::Diagonal(h), Regularizer::Zero) => solve_smooth_diagonal(lambda, v, h.view()),
        (Curvature::Diagonal(h), Regularizer::L1 { theta1 }) => {
            solve_l1_diagonal(lambda, v, h.view(), x, *theta1)
        }
        (Curvature::Diagonal(h), Regularizer::AffineEquality { a, .. }) => {
            solve_affine_equality(lambda, v, h.view(), a.view())
        }
        (Curvature::Diagonal(h), Regularizer::L1PlusNonneg { theta1 }) => {
            solve_nonneg_l1_diagonal(lambda, v, h.view(), x, *theta1)
        }
        (Curvature::Dense(h), Regularizer::Zero | Regularizer::AffineEquality { .. }) => {
            solve_dense(lambda, v, h, g)
        }
        (Curvature::Dense(_), _) => Err(Error::Unsupported(
            "no closed-form direction for a dense kernel Hessian with a nonsmooth regularizer".into(),
        )),
    }
}

/// Direction at `x` for `problem` with stepsize `λ`, together with the
/// curvature it was computed from.
pub fn solve_direction<F: Real>(
    problem: &CompositeProblem<F>,
    x: ArrayView1<F>,
    lambda: F,
) -> Result<(DirectionResult<F>, Curvature<F>)> {
    let v = problem.f.gradient(x)?;
    let curvature = problem.kernel.curvature(x, true)?;
    let dir = solve_with_curvature(lambda, v.view(), &curvature, &problem.g, x)?;
    Ok((dir, curvature))
}
