//! Derivative-free reference solver for the direction subproblem.
//!
//! Cyclic coordinate descent where each one-dimensional problem is minimized
//! by golden-section search; a single affine constraint is handled by
//! bisection on its multiplier. Slow, but shares no algebra with the
//! closed forms it checks.

use ndarray::{Array1, ArrayView1};

use super::closed_form::INTERIOR_EPS;
use crate::error::{check_len, Error, Result};
use crate::kernels::Curvature;
use crate::objectives::Regularizer;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Stopping tolerance on coordinate updates and multiplier brackets.
    pub tol: f64,
    /// Cap on the total number of one-dimensional minimizations.
    pub max_iter: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 1_000_000 }
    }
}

/// Per-coordinate nonsmooth term of the subproblem.
#[derive(Clone, Copy)]
enum Separable<F> {
    None,
    AbsValue(F),
    NonnegLinear(F),
}

struct Problem<'a, F> {
    lambda: F,
    v: ArrayView1<'a, F>,
    curvature: &'a Curvature<F>,
    x: ArrayView1<'a, F>,
    term: Separable<F>,
}

impl<F: Real> Problem<'_, F> {
    fn h(&self, i: usize, j: usize) -> F {
        match self.curvature {
            Curvature::Diagonal(h) => {
                if i == j {
                    h[i]
                } else {
                    F::zero()
                }
            }
            Curvature::Dense(h) => h[[i, j]],
        }
    }

    fn pinned(&self, i: usize) -> bool {
        self.h(i, i) == F::infinity()
    }

    /// Minimizes the subproblem with linear term `v + shift`.
    fn coordinate_descent(&self, shift: &Array1<F>, cfg: &OracleConfig, budget: &mut usize) -> Result<Array1<F>> {
        let n = self.v.len();
        let mut d = Array1::<F>::zeros(n);
        let tol = F::lit(cfg.tol);
        loop {
            let mut largest = F::zero();
            for i in 0..n {
                if self.pinned(i) {
                    continue;
                }
                if *budget == 0 {
                    return Err(Error::NoConvergence("brute_force_direction", cfg.max_iter));
                }
                *budget -= 1;
                let curv = self.h(i, i) / self.lambda;
                let mut lin = self.v[i] + shift[i];
                for j in 0..n {
                    if j != i && d[j] != F::zero() {
                        lin += self.h(i, j) * d[j] / self.lambda;
                    }
                }
                let next = self.minimize_1d(i, curv, lin, tol);
                largest = largest.max((next - d[i]).abs());
                d[i] = next;
            }
            if largest <= tol || matches!(self.curvature, Curvature::Diagonal(_)) {
                return Ok(d);
            }
        }
    }

    /// `argmin_u ½·curv·u² + lin·u + r(x_i + u)` by golden-section search.
    fn minimize_1d(&self, i: usize, curv: F, lin: F, tol: F) -> F {
        let xi = self.x[i];
        let (weight, lo_bound) = match self.term {
            Separable::None => (F::zero(), F::neg_infinity()),
            Separable::AbsValue(t) => (t, F::neg_infinity()),
            Separable::NonnegLinear(t) => (t, -(F::one() - F::lit(INTERIOR_EPS)) * xi),
        };
        let objective = |u: F| {
            let r = match self.term {
                Separable::None => F::zero(),
                Separable::AbsValue(t) => t * (xi + u).abs(),
                Separable::NonnegLinear(t) => t * (xi + u),
            };
            F::lit(0.5) * curv * u * u + lin * u + r
        };
        // The minimizer is within weight/curv of the unregularized one.
        let center = -lin / curv;
        let radius = weight.abs() / curv + F::lit(1e-3) * (F::one() + center.abs());
        let mut lo = center - radius;
        let mut hi = center + radius;
        if lo_bound > F::neg_infinity() {
            lo = lo.max(lo_bound);
            hi = hi.max(lo);
        }
        let ratio = F::lit((5f64.sqrt() - 1.0) / 2.0);
        let mut a = hi - ratio * (hi - lo);
        let mut b = lo + ratio * (hi - lo);
        let mut fa = objective(a);
        let mut fb = objective(b);
        for _ in 0..400 {
            if hi - lo <= tol * (F::one() + lo.abs().max(hi.abs())) {
                break;
            }
            if fa <= fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - ratio * (hi - lo);
                fa = objective(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + ratio * (hi - lo);
                fb = objective(b);
            }
        }
        // Golden-section never evaluates the bracket ends; check them so that
        // minimizers sitting exactly on a bound are recovered.
        let mid = F::lit(0.5) * (lo + hi);
        [mid, lo, hi]
            .into_iter()
            .min_by(|p, q| objective(*p).partial_cmp(&objective(*q)).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(mid)
    }
}

/// Reference minimizer of
/// `⟨v, d⟩ + g(x + d) + (1/2λ)⟨H d, d⟩` over `x + d ∈ cl C`.
///
/// Supports `g` zero, ℓ1, nonnegative ℓ1 (with the same interior safeguard as
/// the closed form) and one affine equality (for which `x` is assumed
/// feasible, so the constraint on `d` is `aᵀd = 0`). `+∞` diagonal
/// curvature pins a coordinate at zero.
pub fn brute_force_direction<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    curvature: &Curvature<F>,
    g: &Regularizer<F>,
    x: ArrayView1<F>,
    cfg: &OracleConfig,
) -> Result<Array1<F>> {
    let n = v.len();
    check_len(n, curvature.dim())?;
    check_len(n, x.len())?;
    let term = match g {
        Regularizer::Zero | Regularizer::AffineEquality { .. } => Separable::None,
        Regularizer::L1 { theta1 } => Separable::AbsValue(*theta1),
        Regularizer::L1PlusNonneg { theta1 } => Separable::NonnegLinear(*theta1),
    };
    let problem = Problem { lambda, v: v.view(), curvature, x: x.view(), term };
    let mut budget = cfg.max_iter;
    let Regularizer::AffineEquality { a, .. } = g else {
        return problem.coordinate_descent(&Array1::zeros(n), cfg, &mut budget);
    };

    // aᵀd(ν) is nonincreasing in the multiplier ν of the linear term ν·a.
    let residual = |nu: F, budget: &mut usize| -> Result<(F, Array1<F>)> {
        let d = problem.coordinate_descent(&a.mapv(|ai| nu * ai), cfg, budget)?;
        Ok((a.dot(&d), d))
    };
    let mut lo = -F::one();
    let mut hi = F::one();
    let mut r_lo = residual(lo, &mut budget)?.0;
    let mut r_hi = residual(hi, &mut budget)?.0;
    let mut expansions = 0;
    while !(r_lo >= F::zero() && r_hi <= F::zero()) {
        expansions += 1;
        if expansions > 200 {
            return Err(Error::NoConvergence("brute_force_direction multiplier bracket", 200));
        }
        if r_lo < F::zero() {
            lo = lo * F::lit(4.0);
            r_lo = residual(lo, &mut budget)?.0;
        }
        if r_hi > F::zero() {
            hi = hi * F::lit(4.0);
            r_hi = residual(hi, &mut budget)?.0;
        }
    }
    let tol = F::lit(cfg.tol);
    let mut best = residual(F::lit(0.5) * (lo + hi), &mut budget)?;
    for _ in 0..300 {
        if hi - lo <= tol * (F::one() + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = F::lit(0.5) * (lo + hi);
        let (r, d) = residual(mid, &mut budget)?;
        if r > F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        best = (r, d);
    }
    Ok(best.1)
}
