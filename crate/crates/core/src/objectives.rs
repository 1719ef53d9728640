//! Smooth parts `f`, convex parts `g` and the composite objective `Ψ = f + g`.

use std::sync::{Arc, OnceLock};

use ndarray::{Array1, Array2, ArrayView1, Zip};

use crate::error::{check_len, Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{power_method, POWER_METHOD_MAX_ITER, POWER_METHOD_TOL};
use crate::scalar::Real;

/// Tolerance on `|Σ_i a_ij − 1|` for the columns of a KL design matrix.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// `|aᵀx − γ|` above which a point is outside the affine constraint set.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind<F> {
    /// `½‖Ax − b‖² + (θ_p/p)‖x‖_p^p`.
    LpLeastSquares { a: Array2<F>, b: Array1<F>, theta_p: F, p: F },
    /// `(1/p)‖Ax − b‖_p^p`.
    LpLoss { a: Array2<F>, b: Array1<F>, p: F },
    /// `D_KL(Ax, b) = Σ (Ax)_i log((Ax)_i / b_i) + b_i − (Ax)_i`.
    KlLinear { a: Array2<F>, b: Array1<F> },
}

/// Smooth part of the composite problem.
#[derive(Debug)]
pub struct SmoothObjective<F> {
    kind: ObjectiveKind<F>,
    lambda_max: OnceLock<F>,
    gram: OnceLock<Array2<F>>,
}

impl<F: Real> Clone for SmoothObjective<F> {
    fn clone(&self) -> Self {
        Self { kind: self.kind.clone(), lambda_max: self.lambda_max.clone(), gram: self.gram.clone() }
    }
}

impl<F: Real> PartialEq for SmoothObjective<F> {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn check_p<F: Real>(p: F) -> Result<()> {
    if p > F::one() && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")))
    }
}

impl<F: Real> SmoothObjective<F> {
    fn from_kind(kind: ObjectiveKind<F>) -> Self {
        Self { kind, lambda_max: OnceLock::new(), gram: OnceLock::new() }
    }

    pub fn lp_least_squares(a: Array2<F>, b: Array1<F>, theta_p: F, p: F) -> Result<Self> {
        check_len(a.nrows(), b.len())?;
        check_p(p)?;
        if !(theta_p > F::zero()) {
            return Err(Error::InvalidParameter(format!("θ_p must be positive, got {theta_p}")));
        }
        Ok(Self::from_kind(ObjectiveKind::LpLeastSquares { a, b, theta_p, p }))
    }

    pub fn lp_loss(a: Array2<F>, b: Array1<F>, p: F) -> Result<Self> {
        check_len(a.nrows(), b.len())?;
        check_p(p)?;
        Ok(Self::from_kind(ObjectiveKind::LpLoss { a, b, p }))
    }

    /// KL linear inverse objective. `A` must be entrywise nonnegative with
    /// unit column sums and `b` strictly positive.
    pub fn kl_linear(a: Array2<F>, b: Array1<F>) -> Result<Self> {
        check_len(a.nrows(), b.len())?;
        if a.iter().any(|&v| v < F::zero() || !v.is_finite()) {
            return Err(Error::InvalidParameter("KL design matrix must be entrywise nonnegative".into()));
        }
        for (j, col) in a.columns().into_iter().enumerate() {
            let s: F = col.sum();
            if (s - F::one()).abs() > F::lit(COLUMN_SUM_TOL) {
                return Err(Error::InvalidParameter(format!("column {j} sums to {s}, expected 1")));
            }
        }
        if b.iter().any(|&v| !(v > F::zero())) {
            return Err(Error::InvalidParameter("KL data vector must be strictly positive".into()));
        }
        Ok(Self::from_kind(ObjectiveKind::KlLinear { a, b }))
    }

    pub fn kind(&self) -> &ObjectiveKind<F> {
        &self.kind
    }

    pub fn matrix(&self) -> &Array2<F> {
        match &self.kind {
            ObjectiveKind::LpLeastSquares { a, .. }
            | ObjectiveKind::LpLoss { a, .. }
            | ObjectiveKind::KlLinear { a, .. } => a,
        }
    }

    pub fn data(&self) -> &Array1<F> {
        match &self.kind {
            ObjectiveKind::LpLeastSquares { b, .. }
            | ObjectiveKind::LpLoss { b, .. }
            | ObjectiveKind::KlLinear { b, .. } => b,
        }
    }

    pub fn n(&self) -> usize {
        self.matrix().ncols()
    }

    pub fn m(&self) -> usize {
        self.matrix().nrows()
    }

    /// `λ_max(AᵀA)`, computed once by power iteration.
    pub fn lambda_max(&self) -> F {
        *self.lambda_max.get_or_init(|| {
            power_method(self.matrix().view(), F::lit(POWER_METHOD_TOL), POWER_METHOD_MAX_ITER)
                .map(|e| e.value)
                .unwrap_or_else(|_| F::zero())
        })
    }

    fn gram(&self) -> &Array2<F> {
        self.gram.get_or_init(|| {
            let a = self.matrix();
            a.t().dot(a)
        })
    }

    fn residual(&self, x: ArrayView1<F>) -> Result<Array1<F>> {
        check_len(self.n(), x.len())?;
        Ok(self.matrix().dot(&x) - self.data())
    }

    pub fn value(&self, x: ArrayView1<F>) -> Result<F> {
        check_len(self.n(), x.len())?;
        let ax = self.matrix().dot(&x);
        self.value_from_image(ax.view(), Some(x))
    }

    /// `f` from `Ax` (and `x` for the separable term).
    fn value_from_image(&self, ax: ArrayView1<F>, x: Option<ArrayView1<F>>) -> Result<F> {
        match &self.kind {
            ObjectiveKind::LpLeastSquares { b, theta_p, p, .. } => {
                let fit = Zip::from(ax).and(b).fold(F::zero(), |acc, &u, &bi| acc + (u - bi) * (u - bi));
                let reg: F = x.map_or(F::zero(), |x| x.iter().map(|v| v.abs().powf(*p)).sum());
                Ok(F::lit(0.5) * fit + *theta_p / *p * reg)
            }
            ObjectiveKind::LpLoss { b, p, .. } => {
                let s = Zip::from(ax).and(b).fold(F::zero(), |acc, &u, &bi| acc + (u - bi).abs().powf(*p));
                Ok(s / *p)
            }
            ObjectiveKind::KlLinear { b, .. } => kl_divergence(ax, b.view()),
        }
    }

    pub fn gradient(&self, x: ArrayView1<F>) -> Result<Array1<F>> {
        check_len(self.n(), x.len())?;
        let a = self.matrix();
        match &self.kind {
            ObjectiveKind::LpLeastSquares { theta_p, p, .. } => {
                let r = self.residual(x)?;
                let pm1 = *p - F::one();
                Ok(a.t().dot(&r) + &x.mapv(|v| *theta_p * v.signed_pow(pm1)))
            }
            ObjectiveKind::LpLoss { p, .. } => {
                let pm1 = *p - F::one();
                let w = self.residual(x)?.mapv(|r| r.signed_pow(pm1));
                Ok(a.t().dot(&w))
            }
            ObjectiveKind::KlLinear { b, .. } => {
                let ax = a.dot(&x);
                if let Some(i) = ax.iter().position(|&v| !(v > F::zero())) {
                    return Err(Error::Domain(format!("(Ax)_{i} is not positive")));
                }
                let w = Zip::from(&ax).and(b).map_collect(|&u, &bi| (u / bi).ln());
                Ok(a.t().dot(&w))
            }
        }
    }

    /// Dense `∇²f(x)`; rejects infinite curvature.
    pub fn hessian(&self, x: ArrayView1<F>) -> Result<Array2<F>> {
        let h = self.hessian_sentinel(x)?;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularHessian("∇²f has an infinite entry".into()));
        }
        Ok(h)
    }

    /// Dense `∇²f(x)` where the separable ℓp term may place `+∞` on the
    /// diagonal at `x_i = 0` (`p < 2`).
    pub fn hessian_sentinel(&self, x: ArrayView1<F>) -> Result<Array2<F>> {
        check_len(self.n(), x.len())?;
        match &self.kind {
            ObjectiveKind::LpLeastSquares { theta_p, p, .. } => {
                let mut h = self.gram().clone();
                for (i, &xi) in x.iter().enumerate() {
                    h[[i, i]] += separable_second(xi, *p, *theta_p);
                }
                Ok(h)
            }
            ObjectiveKind::LpLoss { .. } | ObjectiveKind::KlLinear { .. } => {
                let w = self.curvature_weights(x)?;
                let a = self.matrix();
                let scaled = a * &w.insert_axis(ndarray::Axis(1));
                Ok(a.t().dot(&scaled))
            }
        }
    }

    /// Row weights `w` with `∇²f = Aᵀ diag(w) A` for the non-separable objectives.
    fn curvature_weights(&self, x: ArrayView1<F>) -> Result<Array1<F>> {
        match &self.kind {
            ObjectiveKind::LpLoss { p, .. } => {
                let pm1 = *p - F::one();
                let pm2 = *p - F::lit(2.0);
                let r = self.residual(x)?;
                if *p < F::lit(2.0) {
                    if let Some(i) = r.iter().position(|&v| v == F::zero()) {
                        return Err(Error::SingularHessian(format!("zero residual at row {i} with p < 2")));
                    }
                }
                Ok(r.mapv(|v| if v == F::zero() { F::zero() } else { pm1 * v.abs().powf(pm2) }))
            }
            ObjectiveKind::KlLinear { .. } => {
                let ax = self.matrix().dot(&x);
                if ax.iter().any(|&v| !(v > F::zero())) {
                    return Err(Error::Domain("Ax is not positive".into()));
                }
                Ok(ax.mapv(|v| v.recip()))
            }
            ObjectiveKind::LpLeastSquares { .. } => unreachable!(),
        }
    }

    /// `∇²f(x) v` without forming the Hessian.
    pub fn hessian_apply(&self, x: ArrayView1<F>, v: ArrayView1<F>) -> Result<Array1<F>> {
        check_len(self.n(), x.len())?;
        check_len(self.n(), v.len())?;
        let a = self.matrix();
        match &self.kind {
            ObjectiveKind::LpLeastSquares { theta_p, p, .. } => {
                let mut out = a.t().dot(&a.dot(&v));
                for i in 0..x.len() {
                    let c = separable_second(x[i], *p, *theta_p);
                    if !c.is_finite() {
                        return Err(Error::SingularHessian(format!("infinite curvature at {i}")));
                    }
                    out[i] += c * v[i];
                }
                Ok(out)
            }
            _ => {
                let w = self.curvature_weights(x)?;
                let av = a.dot(&v) * &w;
                Ok(a.t().dot(&av))
            }
        }
    }

    /// Prepares cheap evaluations of `t ↦ f(x + t d)`.
    pub fn along(&self, x: ArrayView1<F>, d: ArrayView1<F>) -> Result<LineRestriction<'_, F>> {
        check_len(self.n(), x.len())?;
        check_len(self.n(), d.len())?;
        let a = self.matrix();
        Ok(LineRestriction {
            f: self,
            x: x.to_owned(),
            d: d.to_owned(),
            ax: a.dot(&x),
            ad: a.dot(&d),
        })
    }

    /// Global Lipschitz surrogate used as the fixed step `1/L` of the
    /// Euclidean baselines (PG, and the initial estimate of PGL).
    pub fn gradient_lipschitz_estimate(&self) -> F {
        match &self.kind {
            ObjectiveKind::LpLeastSquares { theta_p, .. } => self.lambda_max() + *theta_p,
            ObjectiveKind::LpLoss { .. } => self.lambda_max(),
            ObjectiveKind::KlLinear { .. } => F::one(),
        }
    }
}

/// `f` restricted to the ray `x + t d`, reusing `Ax` and `Ad`.
pub struct LineRestriction<'a, F> {
    f: &'a SmoothObjective<F>,
    x: Array1<F>,
    d: Array1<F>,
    ax: Array1<F>,
    ad: Array1<F>,
}

impl<F: Real> LineRestriction<'_, F> {
    pub fn point(&self, t: F) -> Array1<F> {
        Zip::from(&self.x).and(&self.d).map_collect(|&xi, &di| xi + t * di)
    }

    pub fn value(&self, t: F) -> Result<F> {
        let image = Zip::from(&self.ax).and(&self.ad).map_collect(|&u, &w| u + t * w);
        match self.f.kind {
            ObjectiveKind::LpLeastSquares { .. } => {
                let pt = self.point(t);
                self.f.value_from_image(image.view(), Some(pt.view()))
            }
            _ => self.f.value_from_image(image.view(), None),
        }
    }
}

fn separable_second<F: Real>(xi: F, p: F, theta_p: F) -> F {
    let two = F::lit(2.0);
    if xi == F::zero() {
        if p < two {
            F::infinity()
        } else if p == two {
            theta_p
        } else {
            F::zero()
        }
    } else {
        theta_p * (p - F::one()) * xi.abs().powf(p - two)
    }
}

fn kl_divergence<F: Real>(u: ArrayView1<F>, b: ArrayView1<F>) -> Result<F> {
    let mut acc = F::zero();
    for (i, (&ui, &bi)) in u.iter().zip(b.iter()).enumerate() {
        if ui > F::zero() {
            acc += ui * (ui / bi).ln() + bi - ui;
        } else if ui == F::zero() && bi == F::zero() {
            // 0 log 0 convention
        } else {
            return Err(Error::Domain(format!("(Ax)_{i} = {ui} is not positive")));
        }
    }
    Ok(acc)
}

/// Convex part `g` of the composite problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer<F> {
    Zero,
    /// `θ₁‖x‖₁`.
    L1 { theta1: F },
    /// Indicator of `{x : aᵀx = γ}`.
    AffineEquality { a: Array1<F>, gamma: F },
    /// `θ₁ Σ x_i` on `x ≥ 0`, `+∞` elsewhere.
    L1PlusNonneg { theta1: F },
}

impl<F: Real> Regularizer<F> {
    pub fn l1(theta1: F) -> Result<Self> {
        if !(theta1 >= F::zero()) {
            return Err(Error::InvalidParameter(format!("θ₁ must be nonnegative, got {theta1}")));
        }
        Ok(Regularizer::L1 { theta1 })
    }

    pub fn affine_equality(a: Array1<F>, gamma: F) -> Result<Self> {
        if a.iter().all(|&v| v == F::zero()) {
            return Err(Error::DegenerateConstraint);
        }
        Ok(Regularizer::AffineEquality { a, gamma })
    }

    pub fn l1_nonneg(theta1: F) -> Result<Self> {
        if !(theta1 >= F::zero()) {
            return Err(Error::InvalidParameter(format!("θ₁ must be nonnegative, got {theta1}")));
        }
        Ok(Regularizer::L1PlusNonneg { theta1 })
    }

    /// `|aᵀx − γ|` for an affine equality, `None` for the other terms.
    pub fn constraint_residual(&self, x: ArrayView1<F>) -> Option<F> {
        match self {
            Regularizer::AffineEquality { a, gamma } => Some((a.dot(&x) - *gamma).abs()),
            _ => None,
        }
    }

    /// `g(x)`, possibly `+∞`.
    pub fn value(&self, x: ArrayView1<F>) -> F {
        match self {
            Regularizer::Zero => F::zero(),
            Regularizer::L1 { theta1 } => *theta1 * x.iter().fold(F::zero(), |acc, v| acc + v.abs()),
            Regularizer::AffineEquality { a, gamma } => {
                if (a.dot(&x) - *gamma).abs() <= F::lit(FEASIBILITY_TOL) {
                    F::zero()
                } else {
                    F::infinity()
                }
            }
            Regularizer::L1PlusNonneg { theta1 } => {
                if x.iter().any(|&v| v < F::zero()) {
                    F::infinity()
                } else {
                    *theta1 * x.sum()
                }
            }
        }
    }
}

/// `min Ψ(x) = f(x) + g(x)` over the closure of the kernel domain.
#[derive(Debug, Clone)]
pub struct CompositeProblem<F> {
    pub f: Arc<SmoothObjective<F>>,
    pub g: Regularizer<F>,
    pub kernel: Kernel<F>,
    pub ground_truth: Option<Array1<F>>,
}

impl<F: Real> CompositeProblem<F> {
    pub fn new(f: Arc<SmoothObjective<F>>, g: Regularizer<F>, kernel: Kernel<F>) -> Result<Self> {
        let n = f.n();
        if let Regularizer::AffineEquality { a, .. } = &g {
            check_len(n, a.len())?;
        }
        // Probe the kernel dimension with an interior point.
        let probe = Array1::from_elem(n, F::one());
        kernel.phi_value(probe.view())?;
        Ok(Self { f, g, kernel, ground_truth: None })
    }

    pub fn with_ground_truth(mut self, x_star: Array1<F>) -> Result<Self> {
        check_len(self.n(), x_star.len())?;
        self.ground_truth = Some(x_star);
        Ok(self)
    }

    /// Same `f`, `g` and ground truth with a different kernel.
    pub fn with_kernel(&self, kernel: Kernel<F>) -> Result<Self> {
        let mut p = Self::new(self.f.clone(), self.g.clone(), kernel)?;
        p.ground_truth = self.ground_truth.clone();
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    pub fn g_value(&self, x: ArrayView1<F>) -> F {
        self.g.value(x)
    }

    /// `Ψ(x)`; `+∞` outside `dom f` or `dom g`.
    pub fn psi_value(&self, x: ArrayView1<F>) -> F {
        let g = self.g.value(x);
        if !g.is_finite() {
            return F::infinity();
        }
        match self.f.value(x) {
            Ok(v) if v.is_finite() => v + g,
            _ => F::infinity(),
        }
    }

    pub fn accuracy(&self, x: ArrayView1<F>) -> Option<F> {
        self.ground_truth.as_ref().map(|xs| {
            Zip::from(xs).and(x).fold(F::zero(), |acc, &a, &b| acc + (a - b) * (a - b)).sqrt()
        })
    }
}

/// L-smad constant `L` for the catalog pairs `(f, φ)`.
///
/// * ℓp least squares with `½‖·‖² + (1/p)‖·‖_p^p` (same `p`): `λ_max(AᵀA) + θ_p`.
/// * any catalog `f` with `f + (κ/2)‖·‖²` built on the same `f`: `1`.
/// * KL linear objective with the Shannon entropy (optionally plus a ridge): `1`.
pub fn lsmad_constant<F: Real>(f: &SmoothObjective<F>, kernel: &Kernel<F>) -> Result<F> {
    match (&f.kind, kernel) {
        (_, Kernel::FPlusRidge { f: inner, .. }) if inner.as_ref() == f => Ok(F::one()),
        (ObjectiveKind::LpLeastSquares { theta_p, p, .. }, Kernel::Sum(ks)) => {
            let matches = ks.len() == 2
                && ks.iter().any(|k| matches!(k, Kernel::SquaredEuclidean))
                && ks.iter().any(|k| matches!(k, Kernel::PPower { p: q, weight } if q == p && *weight == F::one()));
            if matches {
                Ok(f.lambda_max() + *theta_p)
            } else {
                Err(Error::UnsupportedPair)
            }
        }
        (ObjectiveKind::KlLinear { .. }, Kernel::ShannonEntropy) => Ok(F::one()),
        (ObjectiveKind::KlLinear { .. }, Kernel::Sum(ks)) => {
            let has_entropy = ks.iter().any(|k| matches!(k, Kernel::ShannonEntropy));
            let rest_quadratic = ks.iter().all(|k| {
                matches!(k, Kernel::ShannonEntropy | Kernel::SquaredEuclidean)
                    || matches!(k, Kernel::PPower { p, .. } if *p == F::lit(2.0))
            });
            if has_entropy && rest_quadratic {
                Ok(F::one())
            } else {
                Err(Error::UnsupportedPair)
            }
        }
        _ => Err(Error::UnsupportedPair),
    }
}
