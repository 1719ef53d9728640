use ndarray::{Array1, ArrayView1};

use super::line_search::line_search;
use super::trace::Recorder;
use super::{IterateTrace, SolverConfig, Status, StepRecord};
use crate::directions::solve_direction;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::norm2;
use crate::objectives::{lsmad_constant, CompositeProblem};
use crate::scalar::Real;

/// `λ` from the config, else `1/L` for the problem's (f, φ) pair.
pub(crate) fn resolve_lambda<F: Real>(problem: &CompositeProblem<F>, config: &SolverConfig<F>) -> Result<F> {
    match config.lambda {
        Some(l) => Ok(l),
        None => Ok(F::one() / lsmad_constant(&problem.f, &problem.kernel)?),
    }
}

pub(crate) fn check_start<F: Real>(problem: &CompositeProblem<F>, x0: ArrayView1<F>) -> Result<F> {
    if x0.len() != problem.n() {
        return Err(Error::DimensionMismatch { expected: problem.n(), got: x0.len() });
    }
    if !problem.kernel.domain().contains_interior(x0) {
        return Err(Error::Domain("x0 is not interior to the kernel domain".into()));
    }
    let psi = problem.psi_value(x0);
    if !psi.is_finite() {
        return Err(Error::Domain("Ψ(x0) is not finite".into()));
    }
    Ok(psi)
}

/// Approximate Bregman proximal gradient.
///
/// Each iteration solves the direction subproblem with the kernel Hessian at
/// `x^k`, then backtracks along `d^k` until the sufficient-decrease
/// condition holds. Stops when `‖x^k − x^{k−1}‖ ≤ tol`.
pub fn abpg_solve<F: Real>(
    problem: &CompositeProblem<F>,
    config: &SolverConfig<F>,
    x0: ArrayView1<F>,
) -> Result<IterateTrace<F>> {
    config.validate()?;
    let lambda = resolve_lambda(problem, config)?;
    let mut psi = check_start(problem, x0)?;
    let mut x: Array1<F> = x0.to_owned();
    let mut rec = Recorder::new(psi, problem.accuracy(x.view()), config.max_iter);

    let mut status = Status::MaxIterations;
    for _ in 0..config.max_iter {
        let (dir, curvature) = match solve_direction(problem, x.view(), lambda) {
            Ok(v) => v,
            Err(e) => {
                rec.warn(format!("direction failed: {e}"));
                status = Status::DomainFailure;
                break;
            }
        };
        let outcome = match line_search(problem, x.view(), psi, &dir, config) {
            Ok(o) => o,
            Err(Error::LineSearchFloor(_)) => {
                status = Status::LineSearchFloor;
                break;
            }
            Err(e) => {
                rec.warn(format!("line search failed: {e}"));
                status = Status::DomainFailure;
                break;
            }
        };
        let direction_norm = norm2(dir.d.view());
        let step_norm = outcome.t * direction_norm;
        x = outcome.x;
        psi = outcome.psi;
        rec.push(StepRecord {
            k: 0,
            psi,
            step_norm,
            direction_norm,
            t: outcome.t,
            backtracks: outcome.backtracks,
            rho: dir.rho,
            curvature: curvature.quad_form(dir.d.view()),
            accuracy: problem.accuracy(x.view()),
            constraint_residual: problem.g.constraint_residual(x.view()),
            min_entry: x.iter().fold(F::infinity(), |m, &v| m.min(v)),
            wall_ms: 0.0,
        });
        if step_norm <= config.tol {
            status = Status::Converged;
            break;
        }
    }
    Ok(rec.finish(x, status, lambda))
}

/// Regularized Newton method: ABPG with the kernel `f + (κ/2)‖·‖²`.
pub fn rn_solve<F: Real>(
    problem: &CompositeProblem<F>,
    config: &SolverConfig<F>,
    x0: ArrayView1<F>,
) -> Result<IterateTrace<F>> {
    let kernel = Kernel::f_plus_ridge(problem.f.clone(), config.kappa)?;
    abpg_solve(&problem.with_kernel(kernel)?, config, x0)
}

/// `‖d(x)‖` for a fresh direction solve at `x`: zero exactly at points
/// satisfying the subproblem's first-order condition.
pub fn stationarity_residual<F: Real>(problem: &CompositeProblem<F>, x: ArrayView1<F>, lambda: F) -> Result<F> {
    let (dir, _) = solve_direction(problem, x, lambda)?;
    Ok(norm2(dir.d.view()))
}
