use ndarray::{Array1, ArrayView1, Zip};

use super::abpg::check_start;
use super::trace::Recorder;
use super::{IterateTrace, SolverConfig, Status, StepRecord};
use crate::directions::{bpg_entropy_step, solve_with_curvature};
use crate::error::{Error, Result};
use crate::kernels::{Curvature, Kernel};
use crate::linalg::norm2;
use crate::objectives::{lsmad_constant, CompositeProblem, ObjectiveKind, Regularizer};
use crate::scalar::Real;

/// Multiplier applied to the PGL Lipschitz estimate on each rejection.
pub const PGL_GROWTH: f64 = 2.0;
/// PGL gives up (line-search floor) once its estimate exceeds this.
pub const PGL_MAX_ESTIMATE: f64 = 1e30;

/// Step `x⁺ − x` of the Euclidean prox-gradient map with stepsize `λ`.
/// On `ℝⁿ₊` this is the exact projection `max(0, x − λ(v + θ₁))`, so
/// coordinates may land on the boundary.
fn euclidean_prox_step<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    x: ArrayView1<F>,
    g: &Regularizer<F>,
    identity: &Curvature<F>,
) -> Result<Array1<F>> {
    match g {
        Regularizer::L1PlusNonneg { theta1 } => {
            Ok(Zip::from(x).and(v).map_collect(|&xi, &vi| (xi - lambda * (vi + *theta1)).max(F::zero()) - xi))
        }
        _ => Ok(solve_with_curvature(lambda, v, identity, g, x)?.d),
    }
}

fn record<F: Real>(problem: &CompositeProblem<F>, x: &Array1<F>, psi: F, d: &Array1<F>, t: F, backtracks: usize) -> StepRecord<F> {
    let direction_norm = norm2(d.view());
    StepRecord {
        k: 0,
        psi,
        step_norm: t * direction_norm,
        direction_norm,
        t,
        backtracks,
        rho: F::zero(),
        curvature: F::zero(),
        accuracy: problem.accuracy(x.view()),
        constraint_residual: problem.g.constraint_residual(x.view()),
        min_entry: x.iter().fold(F::infinity(), |m, &v| m.min(v)),
        wall_ms: 0.0,
    }
}

/// Proximal gradient with the fixed step `1/L` (`L` the gradient Lipschitz
/// surrogate of `f`), no line search. The kernel of `problem` is ignored.
pub fn pg_solve<F: Real>(
    problem: &CompositeProblem<F>,
    config: &SolverConfig<F>,
    x0: ArrayView1<F>,
) -> Result<IterateTrace<F>> {
    config.validate()?;
    let lambda = F::one() / problem.f.gradient_lipschitz_estimate();
    let mut psi = check_start(problem, x0)?;
    let mut x = x0.to_owned();
    let mut rec = Recorder::new(psi, problem.accuracy(x.view()), config.max_iter);
    let identity = Curvature::Diagonal(Array1::ones(problem.n()));

    let mut status = Status::MaxIterations;
    for _ in 0..config.max_iter {
        let step = problem
            .f
            .gradient(x.view())
            .and_then(|v| euclidean_prox_step(lambda, v.view(), x.view(), &problem.g, &identity));
        let d = match step {
            Ok(d) => d,
            Err(e) => {
                rec.warn(format!("gradient step failed: {e}"));
                status = Status::DomainFailure;
                break;
            }
        };
        let next = &x + &d;
        let next_psi = problem.psi_value(next.view());
        if !next_psi.is_finite() {
            rec.warn("iterate left dom Ψ".into());
            status = Status::DomainFailure;
            break;
        }
        x = next;
        psi = next_psi;
        let r = record(problem, &x, psi, &d, F::one(), 0);
        let done = r.step_norm <= config.tol;
        rec.push(r);
        if done {
            status = Status::Converged;
            break;
        }
    }
    Ok(rec.finish(x, status, lambda))
}

/// Proximal gradient with backtracking on a Lipschitz estimate `L_k`:
/// `L_k` doubles until
/// `f(x⁺) ≤ f(x) + ⟨∇f(x), x⁺ − x⟩ + (L_k/2)‖x⁺ − x‖²`
/// and is carried over (never decreased) between iterations.
pub fn pgl_solve<F: Real>(
    problem: &CompositeProblem<F>,
    config: &SolverConfig<F>,
    x0: ArrayView1<F>,
) -> Result<IterateTrace<F>> {
    config.validate()?;
    let l0 = problem.f.gradient_lipschitz_estimate();
    let mut estimate = l0;
    let mut psi = check_start(problem, x0)?;
    let mut x = x0.to_owned();
    let mut rec = Recorder::new(psi, problem.accuracy(x.view()), config.max_iter);
    let identity = Curvature::Diagonal(Array1::ones(problem.n()));
    let growth = F::lit(PGL_GROWTH);
    let cap = F::lit(PGL_MAX_ESTIMATE);

    let mut status = Status::MaxIterations;
    'outer: for _ in 0..config.max_iter {
        let (fx, v) = match problem.f.value(x.view()).and_then(|fx| Ok((fx, problem.f.gradient(x.view())?))) {
            Ok(p) => p,
            Err(e) => {
                rec.warn(format!("gradient failed: {e}"));
                status = Status::DomainFailure;
                break;
            }
        };
        let mut backtracks = 0;
        let (d, next) = loop {
            let d = match euclidean_prox_step(F::one() / estimate, v.view(), x.view(), &problem.g, &identity) {
                Ok(d) => d,
                Err(e) => {
                    rec.warn(format!("prox step failed: {e}"));
                    status = Status::DomainFailure;
                    break 'outer;
                }
            };
            let next = &x + &d;
            let bound = fx + v.dot(&d) + estimate / F::lit(2.0) * d.dot(&d);
            match problem.f.value(next.view()) {
                Ok(fn_) if fn_.is_finite() && fn_ <= bound => break (d, next),
                _ => {
                    estimate = estimate * growth;
                    backtracks += 1;
                    if estimate > cap {
                        status = Status::LineSearchFloor;
                        break 'outer;
                    }
                }
            }
        };
        let next_psi = problem.psi_value(next.view());
        if !next_psi.is_finite() {
            rec.warn("iterate left dom Ψ".into());
            status = Status::DomainFailure;
            break;
        }
        x = next;
        psi = next_psi;
        let r = record(problem, &x, psi, &d, l0 / estimate, backtracks);
        let done = r.step_norm <= config.tol;
        rec.push(r);
        if done {
            status = Status::Converged;
            break;
        }
    }
    Ok(rec.finish(x, status, F::one() / estimate))
}

/// Bregman proximal gradient with the Shannon entropy kernel for the KL
/// linear inverse problem with `g = θ₁Σx_i` (or `g ≡ 0`) on `ℝⁿ₊`.
/// Multiplicative update with the fixed stepsize `λ`, no line search.
pub fn bpg_solve<F: Real>(
    problem: &CompositeProblem<F>,
    config: &SolverConfig<F>,
    x0: ArrayView1<F>,
) -> Result<IterateTrace<F>> {
    config.validate()?;
    if !matches!(problem.f.kind(), ObjectiveKind::KlLinear { .. }) {
        return Err(Error::Unsupported("BPG is implemented for the KL linear objective only".into()));
    }
    let theta1 = match &problem.g {
        Regularizer::Zero => F::zero(),
        Regularizer::L1PlusNonneg { theta1 } => *theta1,
        _ => return Err(Error::Unsupported("BPG needs g ≡ 0 or θ₁Σx on ℝⁿ₊".into())),
    };
    let entropy = problem.with_kernel(Kernel::shannon_entropy())?;
    let lambda = match config.lambda {
        Some(l) => l,
        None => F::one() / lsmad_constant(&entropy.f, &entropy.kernel)?,
    };
    let mut psi = check_start(&entropy, x0)?;
    let mut x = x0.to_owned();
    let mut rec = Recorder::new(psi, problem.accuracy(x.view()), config.max_iter);

    let mut status = Status::MaxIterations;
    for k in 1..=config.max_iter {
        let step = problem.f.gradient(x.view()).and_then(|v| bpg_entropy_step(lambda, v.view(), x.view(), theta1));
        let step = match step {
            Ok(s) => s,
            Err(e) => {
                rec.warn(format!("entropy step failed: {e}"));
                status = Status::DomainFailure;
                break;
            }
        };
        if step.clamped {
            rec.warn(format!("exponent clamped at iteration {k}"));
        }
        let next_psi = problem.psi_value(step.x.view());
        if !next_psi.is_finite() {
            rec.warn("iterate left dom Ψ".into());
            status = Status::DomainFailure;
            break;
        }
        let d = &step.x - &x;
        x = step.x;
        psi = next_psi;
        let r = record(problem, &x, psi, &d, F::one(), 0);
        let done = r.step_norm <= config.tol;
        rec.push(r);
        if done {
            status = Status::Converged;
            break;
        }
    }
    Ok(rec.finish(x, status, lambda))
}
