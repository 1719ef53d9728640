use ndarray::{Array1, Array2, ArrayView1, Zip};

use super::{AffineKktFactors, DirectionResult};
use crate::error::{check_len, Error, Result};
use crate::linalg::SpdFactor;
use crate::objectives::Regularizer;
use crate::scalar::Real;

/// Fraction of the distance to the orthant boundary a nonnegative step may
/// not cover: `x + d ≥ ε·x` componentwise.
pub const INTERIOR_EPS: f64 = 1e-12;

/// Bound on `|λ(v_i + θ₁)|` in the multiplicative entropy update.
pub const EXP_CLAMP: f64 = 700.0;

/// `λ/h_i`, with the zero-scale convention for `h_i = +∞`.
fn scales<F: Real>(lambda: F, h: ArrayView1<F>) -> Result<Array1<F>> {
    let mut s = Array1::zeros(h.len());
    for (i, &hi) in h.iter().enumerate() {
        if hi == F::infinity() {
            continue;
        }
        if !(hi > F::zero()) || !hi.is_finite() {
            return Err(Error::InvalidScale(i, format!("curvature {hi}")));
        }
        s[i] = lambda / hi;
    }
    Ok(s)
}

fn check_lambda<F: Real>(lambda: F) -> Result<()> {
    if lambda > F::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("stepsize must be positive, got {lambda}")))
    }
}

/// `soft_s(z) = sgn(z)·max(|z| − s, 0)`; ties map to zero.
#[inline]
pub fn soft_threshold<F: Real>(z: F, s: F) -> F {
    if z.abs() <= s {
        F::zero()
    } else {
        z - s * z.signum()
    }
}

/// `d = −λ H⁻¹ v` for diagonal `H` and `g ≡ 0`.
pub fn solve_smooth_diagonal<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    h: ArrayView1<F>,
) -> Result<DirectionResult<F>> {
    check_lambda(lambda)?;
    check_len(v.len(), h.len())?;
    let s = scales(lambda, h)?;
    let d = Zip::from(&s).and(v).map_collect(|&si, &vi| -si * vi);
    let rho = v.dot(&d);
    Ok(DirectionResult { scales: Some(s), ..DirectionResult::plain(d, rho) })
}

/// Coordinatewise minimizer of `v_i u + θ₁|x_i + u| + (h_i/2λ)u²`:
/// `d_i = soft_{θ₁ s_i}(x_i − s_i v_i) − x_i` with `s_i = λ/h_i`.
pub fn solve_l1_diagonal<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    h: ArrayView1<F>,
    x: ArrayView1<F>,
    theta1: F,
) -> Result<DirectionResult<F>> {
    check_lambda(lambda)?;
    check_len(v.len(), h.len())?;
    check_len(v.len(), x.len())?;
    if !(theta1 >= F::zero()) {
        return Err(Error::InvalidParameter(format!("θ₁ must be nonnegative, got {theta1}")));
    }
    let s = scales(lambda, h)?;
    let d = Zip::from(&s).and(v).and(x).map_collect(|&si, &vi, &xi| {
        if si == F::zero() {
            F::zero()
        } else {
            soft_threshold(xi - si * vi, theta1 * si) - xi
        }
    });
    let l1 = |y: &mut dyn Iterator<Item = F>| y.fold(F::zero(), |acc, t| acc + t.abs());
    let before = l1(&mut x.iter().copied());
    let after = l1(&mut x.iter().zip(d.iter()).map(|(&xi, &di)| xi + di));
    let rho = v.dot(&d) + theta1 * (after - before);
    Ok(DirectionResult { scales: Some(s), ..DirectionResult::plain(d, rho) })
}

/// Minimizer under one linear constraint `aᵀd = 0`, from the block inverse of
///
/// ```text
/// [ H  a ] [d]   [−λv]
/// [ aᵀ 0 ] [μ] = [ 0 ]
/// ```
///
/// `d = −λH⁻¹v − δ⁻¹λ u uᵀv`, `μ = δ⁻¹λ uᵀv`, `u = H⁻¹a`, `δ = −aᵀu`.
pub fn solve_affine_equality<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    h: ArrayView1<F>,
    a: ArrayView1<F>,
) -> Result<DirectionResult<F>> {
    check_lambda(lambda)?;
    check_len(v.len(), h.len())?;
    check_len(v.len(), a.len())?;
    if a.iter().all(|&ai| ai == F::zero()) {
        return Err(Error::DegenerateConstraint);
    }
    let inv = scales(F::one(), h)?;
    let u = &inv * &a;
    let delta = -a.dot(&u);
    if delta == F::zero() {
        return Err(Error::DegenerateConstraint);
    }
    let utv = u.dot(&v);
    let d = Zip::from(&inv).and(v).and(&u).map_collect(|&hi, &vi, &ui| {
        -lambda * hi * vi - lambda * utv / delta * ui
    });
    let mu = lambda * utv / delta;
    let rho = v.dot(&d);
    Ok(DirectionResult {
        d,
        rho,
        mu: Some(mu),
        scales: Some(inv.mapv(|hi| lambda * hi)),
        kkt: Some(AffineKktFactors { u, delta }),
    })
}

/// Minimizer of `v_i u + θ₁(x_i + u) + (h_i/2λ)u²` over `x_i + u ≥ ε x_i`:
/// `d_i = max(−(1 − ε)x_i, −λ(v_i + θ₁)/h_i)`.
pub fn solve_nonneg_l1_diagonal<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    h: ArrayView1<F>,
    x: ArrayView1<F>,
    theta1: F,
) -> Result<DirectionResult<F>> {
    check_lambda(lambda)?;
    check_len(v.len(), h.len())?;
    check_len(v.len(), x.len())?;
    if let Some(i) = x.iter().position(|&xi| !(xi > F::zero())) {
        return Err(Error::Domain(format!("x_{i} is not strictly positive")));
    }
    let s = scales(lambda, h)?;
    let keep = F::one() - F::lit(INTERIOR_EPS);
    let d = Zip::from(&s).and(v).and(x).map_collect(|&si, &vi, &xi| {
        let free = -si * (vi + theta1);
        free.max(-keep * xi)
    });
    let rho = v.dot(&d) + theta1 * d.sum();
    Ok(DirectionResult { scales: Some(s), ..DirectionResult::plain(d, rho) })
}

/// Outcome of one entropy-kernel BPG step.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyStep<F> {
    pub x: Array1<F>,
    /// Whether any exponent hit the `±700` clamp.
    pub clamped: bool,
}

/// Bregman proximal step for the Shannon entropy and `g = θ₁Σx_i` on `ℝⁿ₊`:
/// `x⁺_i = x_i·exp(−λ(v_i + θ₁))`.
pub fn bpg_entropy_step<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    x: ArrayView1<F>,
    theta1: F,
) -> Result<EntropyStep<F>> {
    check_lambda(lambda)?;
    check_len(v.len(), x.len())?;
    if let Some(i) = x.iter().position(|&xi| !(xi > F::zero())) {
        return Err(Error::Domain(format!("x_{i} is not strictly positive")));
    }
    let bound = F::lit(EXP_CLAMP);
    let mut clamped = false;
    let next = Zip::from(x).and(v).map_collect(|&xi, &vi| {
        let e = -lambda * (vi + theta1);
        let ec = e.max(-bound).min(bound);
        clamped |= ec != e;
        xi * ec.exp()
    });
    if let Some(i) = next.iter().position(|&xi| !(xi > F::zero()) || !xi.is_finite()) {
        return Err(Error::Domain(format!("entropy step left the positive orthant at {i}")));
    }
    Ok(EntropyStep { x: next, clamped })
}

/// Direction for a dense kernel Hessian (possibly with `+∞` pinned diagonal
/// entries) and `g ≡ 0` or a single affine equality.
pub fn solve_dense<F: Real>(
    lambda: F,
    v: ArrayView1<F>,
    h: &Array2<F>,
    g: &Regularizer<F>,
) -> Result<DirectionResult<F>> {
    check_lambda(lambda)?;
    check_len(v.len(), h.nrows())?;
    let factor = SpdFactor::new(h)?;
    let w = factor.solve(v);
    match g {
        Regularizer::Zero => {
            let d = w.mapv(|wi| -lambda * wi);
            let rho = v.dot(&d);
            Ok(DirectionResult::plain(d, rho))
        }
        Regularizer::AffineEquality { a, .. } => {
            check_len(v.len(), a.len())?;
            let u = factor.solve(a.view());
            let delta = -a.dot(&u);
            if delta == F::zero() {
                return Err(Error::DegenerateConstraint);
            }
            let utv = u.dot(&v);
            let d = Zip::from(&w).and(&u).map_collect(|&wi, &ui| -lambda * wi - lambda * utv / delta * ui);
            let rho = v.dot(&d);
            Ok(DirectionResult {
                d,
                rho,
                mu: Some(lambda * utv / delta),
                scales: None,
                kkt: Some(AffineKktFactors { u, delta }),
            })
        }
        _ => Err(Error::Unsupported("dense direction supports g ≡ 0 or one affine equality".into())),
    }
}
