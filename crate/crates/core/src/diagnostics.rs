//! Numerical audits: finite-difference derivative checks and the sampled
//! extended descent lemma.

use ndarray::{Array1, ArrayView1};

use crate::error::Result;
use crate::kernels::Kernel;
use crate::linalg::norm2;
use crate::objectives::SmoothObjective;
use crate::scalar::Real;

/// Central-difference step relative to `1 + |x_i|`.
pub const FD_GRADIENT_STEP: f64 = 1e-6;
pub const FD_GRADIENT_TOL: f64 = 1e-6;
pub const FD_HESSIAN_STEP: f64 = 1e-6;
pub const FD_HESSIAN_TOL: f64 = 1e-5;

/// `‖a − b‖ / max(‖b‖, 1)`: relative error with a unit floor so that
/// vanishing reference vectors are compared absolutely.
pub fn relative_error<F: Real>(a: ArrayView1<F>, b: ArrayView1<F>) -> F {
    let diff = &a - &b;
    norm2(diff.view()) / norm2(b).max(F::one())
}

/// Central finite-difference gradient with per-coordinate step `rel·(1 + |x_i|)`.
pub fn fd_gradient<F, Fun>(value: Fun, x: ArrayView1<F>, rel: F) -> Result<Array1<F>>
where
    F: Real,
    Fun: Fn(ArrayView1<F>) -> Result<F>,
{
    let mut g = Array1::zeros(x.len());
    let mut probe = x.to_owned();
    for i in 0..x.len() {
        let h = rel * (F::one() + x[i].abs());
        probe[i] = x[i] + h;
        let up = value(probe.view())?;
        probe[i] = x[i] - h;
        let down = value(probe.view())?;
        probe[i] = x[i];
        g[i] = (up - down) / (h + h);
    }
    Ok(g)
}

/// Central finite difference of a gradient map along `v`: `≈ ∇²(x) v`.
pub fn fd_hessian_apply<F, Grad>(gradient: Grad, x: ArrayView1<F>, v: ArrayView1<F>, rel: F) -> Result<Array1<F>>
where
    F: Real,
    Grad: Fn(ArrayView1<F>) -> Result<Array1<F>>,
{
    let scale = F::one() + x.iter().fold(F::zero(), |m, &xi| m.max(xi.abs()));
    let vn = norm2(v).max(F::min_positive_value());
    let h = rel * scale / vn;
    let up = gradient((&x + &v.mapv(|vi| vi * h)).view())?;
    let down = gradient((&x - &v.mapv(|vi| vi * h)).view())?;
    Ok((up - down) / (h + h))
}

/// Diagonal of the Hessian by central differences of the gradient.
pub fn fd_hessian_diag<F, Grad>(gradient: Grad, x: ArrayView1<F>, rel: F) -> Result<Array1<F>>
where
    F: Real,
    Grad: Fn(ArrayView1<F>) -> Result<Array1<F>>,
{
    let mut out = Array1::zeros(x.len());
    let mut probe = x.to_owned();
    for i in 0..x.len() {
        let h = rel * (F::one() + x[i].abs());
        probe[i] = x[i] + h;
        let up = gradient(probe.view())?[i];
        probe[i] = x[i] - h;
        let down = gradient(probe.view())?[i];
        probe[i] = x[i];
        out[i] = (up - down) / (h + h);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsmadViolation<F> {
    pub index: usize,
    /// `|f(x) − f(y) − ⟨∇f(y), x − y⟩|`.
    pub lhs: F,
    /// `L·D_φ(x, y)`.
    pub rhs: F,
    /// `rhs − lhs` (negative).
    pub slack: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsmadReport<F> {
    pub checked: usize,
    pub violations: Vec<LsmadViolation<F>>,
    /// Smallest `rhs − lhs` over all pairs.
    pub worst_slack: F,
    /// Pairs skipped because a point was outside a domain.
    pub skipped: usize,
}

impl<F: Real> LsmadReport<F> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `|f(x) − f(y) − ⟨∇f(y), x − y⟩| ≤ L·D_φ(x, y)` on sampled pairs.
///
/// A pair only counts as a violation when the gap exceeds the rounding error
/// of the left-hand side (a few ulps of the magnitudes involved).
pub fn check_lsmad_sampled<F: Real>(
    f: &SmoothObjective<F>,
    kernel: &Kernel<F>,
    l: F,
    pairs: &[(Array1<F>, Array1<F>)],
) -> LsmadReport<F> {
    let mut report = LsmadReport { checked: 0, violations: Vec::new(), worst_slack: F::infinity(), skipped: 0 };
    let ulps = F::lit(64.0) * F::epsilon();
    for (index, (x, y)) in pairs.iter().enumerate() {
        let eval = || -> Result<(F, F, F)> {
            let fx = f.value(x.view())?;
            let fy = f.value(y.view())?;
            let lin = f.gradient(y.view())?.dot(&(x - y));
            let d = kernel.bregman(x.view(), y.view())?;
            let lhs = (fx - fy - lin).abs();
            let noise = ulps * (fx.abs() + fy.abs() + lin.abs());
            Ok((lhs, l * d, noise))
        };
        match eval() {
            Ok((lhs, rhs, noise)) => {
                report.checked += 1;
                let slack = rhs - lhs;
                report.worst_slack = report.worst_slack.min(slack);
                if slack < -noise {
                    report.violations.push(LsmadViolation { index, lhs, rhs, slack });
                }
            }
            Err(_) => report.skipped += 1,
        }
    }
    report
}
