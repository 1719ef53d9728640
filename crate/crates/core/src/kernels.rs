//! Kernel generating distances, exact Bregman distances and their
//! second-order approximations.
//!
//! A kernel `φ` induces
//!
//! ```text
//! D_φ(x, y) = φ(x) − φ(y) − ⟨∇φ(y), x − y⟩
//! D̃_φ(x, y) = ½ ⟨∇²φ(y)(x − y), x − y⟩
//! ```
//!
//! Separable kernels expose their Hessian as a diagonal vector. At `x_i = 0`
//! the `p`-power kernel with `p ∈ (1, 2)` has an infinite second derivative;
//! [`Kernel::phi_hessian_diag_sentinel`] reports it as `+∞` so that direction
//! solvers can apply the zero-scale convention (`d_i = 0`), while the strict
//! [`Kernel::phi_hessian_diag`] rejects it.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, Zip};

use crate::error::{check_len, Error, Result};
use crate::linalg::SpdFactor;
use crate::objectives::SmoothObjective;
use crate::scalar::Real;

/// Effective domain of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Domain {
    AllSpace,
    /// `dom φ = ℝⁿ₊`, interior is the open positive orthant.
    NonnegativeOrthantClosure,
    /// `dom φ = ℝⁿ₊₊`.
    PositiveOrthant,
}

impl Domain {
    pub fn contains<F: Real>(self, x: ArrayView1<F>) -> bool {
        match self {
            Domain::AllSpace => x.iter().all(|v| v.is_finite()),
            Domain::NonnegativeOrthantClosure => x.iter().all(|&v| v >= F::zero() && v.is_finite()),
            Domain::PositiveOrthant => x.iter().all(|&v| v > F::zero() && v.is_finite()),
        }
    }

    pub fn contains_interior<F: Real>(self, x: ArrayView1<F>) -> bool {
        match self {
            Domain::AllSpace => x.iter().all(|v| v.is_finite()),
            _ => x.iter().all(|&v| v > F::zero() && v.is_finite()),
        }
    }

    /// Intersection of two domains of this family is the more restrictive one.
    pub fn intersect(self, other: Domain) -> Domain {
        self.max(other)
    }
}

/// Hessian of a kernel at a point, in the cheapest exact representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Curvature<F> {
    Diagonal(Array1<F>),
    Dense(Array2<F>),
}

impl<F: Real> Curvature<F> {
    pub fn dim(&self) -> usize {
        match self {
            Curvature::Diagonal(h) => h.len(),
            Curvature::Dense(h) => h.nrows(),
        }
    }

    /// `⟨H d, d⟩`, skipping coordinates pinned by a `+∞` sentinel (their
    /// `d_i` is zero by construction).
    pub fn quad_form(&self, d: ArrayView1<F>) -> F {
        match self {
            Curvature::Diagonal(h) => h
                .iter()
                .zip(d.iter())
                .filter(|(hi, _)| hi.is_finite())
                .fold(F::zero(), |acc, (&hi, &di)| acc + hi * di * di),
            Curvature::Dense(h) => {
                let n = d.len();
                let mut acc = F::zero();
                for i in 0..n {
                    if d[i] == F::zero() {
                        continue;
                    }
                    let mut row = F::zero();
                    for j in 0..n {
                        if d[j] != F::zero() {
                            row += h[[i, j]] * d[j];
                        }
                    }
                    acc += row * d[i];
                }
                acc
            }
        }
    }
}

/// A kernel generating distance `φ`.
#[derive(Debug, Clone)]
pub enum Kernel<F> {
    /// `½‖x‖²`.
    SquaredEuclidean,
    /// `(weight/p)·‖x‖_p^p`.
    PPower { p: F, weight: F },
    /// Boltzmann–Shannon entropy `Σ x_i log x_i` with `0 log 0 = 0`.
    ShannonEntropy,
    /// Burg entropy `−Σ log x_i`.
    BurgEntropy,
    /// `½⟨x, Hx⟩` for a fixed positive definite `H`; `sigma` caches `λ_min(H)`.
    FixedQuadratic { h: Array2<F>, sigma: F },
    Sum(Vec<Kernel<F>>),
    /// `f(x) + (κ/2)‖x‖²` for a convex smooth objective `f`.
    FPlusRidge { f: Arc<SmoothObjective<F>>, kappa: F },
}

impl<F: Real> Kernel<F> {
    pub fn squared_euclidean() -> Self {
        Kernel::SquaredEuclidean
    }

    pub fn p_power(p: F, weight: F) -> Result<Self> {
        if !(p > F::one()) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p-power kernel needs p > 1, got {p}")));
        }
        if !(weight >= F::zero()) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!("negative kernel weight {weight}")));
        }
        Ok(Kernel::PPower { p, weight })
    }

    pub fn shannon_entropy() -> Self {
        Kernel::ShannonEntropy
    }

    pub fn burg_entropy() -> Self {
        Kernel::BurgEntropy
    }

    pub fn fixed_quadratic(h: Array2<F>) -> Result<Self> {
        let n = h.nrows();
        check_len(n, h.ncols())?;
        for i in 0..n {
            for j in 0..i {
                let scale = F::one() + h[[i, j]].abs();
                if (h[[i, j]] - h[[j, i]]).abs() > F::lit(1e-12) * scale {
                    return Err(Error::InvalidParameter("fixed quadratic kernel needs symmetric H".into()));
                }
            }
        }
        let factor = SpdFactor::new(&h)?;
        let sigma = factor.min_eigenvalue(F::lit(1e-12), 10_000);
        Ok(Kernel::FixedQuadratic { h, sigma })
    }

    pub fn sum(members: Vec<Kernel<F>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter("empty kernel sum".into()));
        }
        Ok(Kernel::Sum(members))
    }

    pub fn f_plus_ridge(f: Arc<SmoothObjective<F>>, kappa: F) -> Result<Self> {
        if !(kappa > F::zero()) {
            return Err(Error::InvalidParameter(format!("ridge weight must be positive, got {kappa}")));
        }
        Ok(Kernel::FPlusRidge { f, kappa })
    }

    /// `½‖x‖² + (1/p)‖x‖_p^p`, the kernel paired with ℓp-regularized least squares.
    pub fn lp_composite(p: F) -> Result<Self> {
        Kernel::sum(vec![Kernel::SquaredEuclidean, Kernel::p_power(p, F::one())?])
    }

    /// `Σ x_i log x_i + ½‖x‖²`.
    pub fn entropy_ridge() -> Self {
        Kernel::Sum(vec![Kernel::ShannonEntropy, Kernel::SquaredEuclidean])
    }

    /// `φ + (σ/2)‖·‖²`, restoring strong convexity of a kernel.
    pub fn with_ridge(self, sigma: F) -> Result<Self> {
        if sigma == F::zero() {
            return Ok(self);
        }
        Kernel::sum(vec![self, Kernel::p_power(F::lit(2.0), sigma)?])
    }

    pub fn domain(&self) -> Domain {
        match self {
            Kernel::ShannonEntropy => Domain::NonnegativeOrthantClosure,
            Kernel::BurgEntropy => Domain::PositiveOrthant,
            Kernel::Sum(ks) => ks.iter().fold(Domain::AllSpace, |d, k| d.intersect(k.domain())),
            _ => Domain::AllSpace,
        }
    }

    /// Modulus of strong convexity on the interior of the domain (0 if none).
    pub fn strong_convexity(&self) -> F {
        match self {
            Kernel::SquaredEuclidean => F::one(),
            Kernel::PPower { p, weight } if *p == F::lit(2.0) => *weight,
            Kernel::PPower { .. } | Kernel::ShannonEntropy | Kernel::BurgEntropy => F::zero(),
            Kernel::FixedQuadratic { sigma, .. } => *sigma,
            Kernel::Sum(ks) => ks.iter().map(|k| k.strong_convexity()).sum(),
            Kernel::FPlusRidge { kappa, .. } => *kappa,
        }
    }

    /// Whether the Hessian is diagonal everywhere.
    pub fn is_separable(&self) -> bool {
        match self {
            Kernel::FixedQuadratic { .. } | Kernel::FPlusRidge { .. } => false,
            Kernel::Sum(ks) => ks.iter().all(|k| k.is_separable()),
            _ => true,
        }
    }

    fn fixed_dim(&self) -> Option<usize> {
        match self {
            Kernel::FixedQuadratic { h, .. } => Some(h.nrows()),
            Kernel::FPlusRidge { f, .. } => Some(f.n()),
            Kernel::Sum(ks) => ks.iter().find_map(|k| k.fixed_dim()),
            _ => None,
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(d) => check_len(d, n),
            None => Ok(()),
        }
    }

    fn require_interior(&self, x: ArrayView1<F>) -> Result<()> {
        if self.domain().contains_interior(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("point is not interior to {:?}", self.domain())))
        }
    }

    pub fn phi_value(&self, x: ArrayView1<F>) -> Result<F> {
        self.check_dim(x.len())?;
        if !self.domain().contains(x) {
            return Err(Error::Domain(format!("point outside closure of {:?}", self.domain())));
        }
        Ok(match self {
            Kernel::SquaredEuclidean => F::lit(0.5) * x.dot(&x),
            Kernel::PPower { p, weight } => {
                *weight / *p * x.iter().map(|v| v.abs().powf(*p)).sum::<F>()
            }
            Kernel::ShannonEntropy => x.iter().map(|&v| xlogx(v)).sum(),
            Kernel::BurgEntropy => -x.iter().map(|v| v.ln()).sum::<F>(),
            Kernel::FixedQuadratic { h, .. } => F::lit(0.5) * x.dot(&h.dot(&x)),
            Kernel::Sum(ks) => {
                let mut acc = F::zero();
                for k in ks {
                    acc += k.phi_value(x)?;
                }
                acc
            }
            Kernel::FPlusRidge { f, kappa } => f.value(x)? + F::lit(0.5) * *kappa * x.dot(&x),
        })
    }

    pub fn phi_gradient(&self, x: ArrayView1<F>) -> Result<Array1<F>> {
        self.check_dim(x.len())?;
        self.require_interior(x)?;
        Ok(match self {
            Kernel::SquaredEuclidean => x.to_owned(),
            Kernel::PPower { p, weight } => {
                x.mapv(|v| *weight * v.signed_pow(*p - F::one()))
            }
            Kernel::ShannonEntropy => x.mapv(|v| F::one() + v.ln()),
            Kernel::BurgEntropy => x.mapv(|v| -v.recip()),
            Kernel::FixedQuadratic { h, .. } => h.dot(&x),
            Kernel::Sum(ks) => {
                let mut acc = Array1::zeros(x.len());
                for k in ks {
                    acc += &k.phi_gradient(x)?;
                }
                acc
            }
            Kernel::FPlusRidge { f, kappa } => f.gradient(x)? + &x.mapv(|v| *kappa * v),
        })
    }

    /// Diagonal of `∇²φ(x)` where `+∞` marks an infinite second derivative
    /// (the `p`-power kernel at `x_i = 0` with `p < 2`).
    pub fn phi_hessian_diag_sentinel(&self, x: ArrayView1<F>) -> Result<Array1<F>> {
        self.check_dim(x.len())?;
        self.require_interior(x)?;
        match self {
            Kernel::SquaredEuclidean => Ok(Array1::ones(x.len())),
            Kernel::PPower { p, weight } => Ok(x.mapv(|v| p_power_second(v, *p, *weight))),
            Kernel::ShannonEntropy => Ok(x.mapv(|v| v.recip())),
            Kernel::BurgEntropy => Ok(x.mapv(|v| (v * v).recip())),
            Kernel::Sum(ks) => {
                let mut acc = Array1::zeros(x.len());
                for k in ks {
                    acc += &k.phi_hessian_diag_sentinel(x)?;
                }
                Ok(acc)
            }
            Kernel::FixedQuadratic { .. } | Kernel::FPlusRidge { .. } => {
                Err(Error::Unsupported("kernel Hessian is not diagonal".into()))
            }
        }
    }

    /// Diagonal of `∇²φ(x)`; fails if any entry is not finite.
    pub fn phi_hessian_diag(&self, x: ArrayView1<F>) -> Result<Array1<F>> {
        let h = self.phi_hessian_diag_sentinel(x)?;
        if let Some(i) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularHessian(format!("infinite curvature at coordinate {i}")));
        }
        Ok(h)
    }

    /// `∇²φ(x)` in diagonal or dense form. With `allow_sentinel`, infinite
    /// diagonal entries are passed through as `+∞`.
    pub fn curvature(&self, x: ArrayView1<F>, allow_sentinel: bool) -> Result<Curvature<F>> {
        let diag = |k: &Kernel<F>| {
            if allow_sentinel {
                k.phi_hessian_diag_sentinel(x)
            } else {
                k.phi_hessian_diag(x)
            }
        };
        if self.is_separable() {
            return Ok(Curvature::Diagonal(diag(self)?));
        }
        self.check_dim(x.len())?;
        self.require_interior(x)?;
        let mut h = match self {
            Kernel::FixedQuadratic { h, .. } => h.clone(),
            Kernel::FPlusRidge { f, kappa } => {
                let mut h = if allow_sentinel { f.hessian_sentinel(x)? } else { f.hessian(x)? };
                for i in 0..x.len() {
                    h[[i, i]] += *kappa;
                }
                h
            }
            Kernel::Sum(ks) => {
                let n = x.len();
                let mut acc = Array2::zeros((n, n));
                for k in ks {
                    match k.curvature(x, allow_sentinel)? {
                        Curvature::Diagonal(d) => {
                            for i in 0..n {
                                acc[[i, i]] += d[i];
                            }
                        }
                        Curvature::Dense(m) => acc += &m,
                    }
                }
                acc
            }
            _ => unreachable!("separable kernels handled above"),
        };
        if !allow_sentinel && h.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularHessian("non-finite Hessian entry".into()));
        }
        // 0·∞ from a pinned row must not leak into other coordinates.
        h.mapv_inplace(|v| if v.is_nan() { F::infinity() } else { v });
        Ok(Curvature::Dense(h))
    }

    /// `∇²φ(x) v`.
    pub fn phi_hessian_apply(&self, x: ArrayView1<F>, v: ArrayView1<F>) -> Result<Array1<F>> {
        check_len(x.len(), v.len())?;
        match self {
            Kernel::FPlusRidge { f, kappa } => {
                self.require_interior(x)?;
                Ok(f.hessian_apply(x, v)? + &v.mapv(|vi| *kappa * vi))
            }
            Kernel::FixedQuadratic { h, .. } => {
                self.check_dim(x.len())?;
                Ok(h.dot(&v))
            }
            Kernel::Sum(ks) => {
                let mut acc = Array1::zeros(x.len());
                for k in ks {
                    acc += &k.phi_hessian_apply(x, v)?;
                }
                Ok(acc)
            }
            _ => {
                let h = self.phi_hessian_diag(x)?;
                Ok(&h * &v)
            }
        }
    }

    /// Exact Bregman distance `D_φ(x, y)`; `x` in the closure of the domain,
    /// `y` interior.
    pub fn bregman(&self, x: ArrayView1<F>, y: ArrayView1<F>) -> Result<F> {
        check_len(x.len(), y.len())?;
        self.check_dim(x.len())?;
        if !self.domain().contains(x) {
            return Err(Error::Domain("first argument outside the kernel domain".into()));
        }
        self.require_interior(y)?;
        Ok(match self {
            Kernel::SquaredEuclidean => {
                let diff = &x - &y;
                F::lit(0.5) * diff.dot(&diff)
            }
            Kernel::FixedQuadratic { h, .. } => {
                let diff = &x - &y;
                F::lit(0.5) * diff.dot(&h.dot(&diff))
            }
            Kernel::ShannonEntropy => Zip::from(x)
                .and(y)
                .fold(F::zero(), |acc, &xi, &yi| acc + (xlogx(xi) - xi * yi.ln() - xi + yi).max(F::zero())),
            Kernel::BurgEntropy => Zip::from(x).and(y).fold(F::zero(), |acc, &xi, &yi| {
                let r = xi / yi;
                acc + (r - r.ln() - F::one()).max(F::zero())
            }),
            Kernel::PPower { p, weight } => Zip::from(x).and(y).fold(F::zero(), |acc, &xi, &yi| {
                let term = *weight / *p * (xi.abs().powf(*p) - yi.abs().powf(*p))
                    - *weight * yi.signed_pow(*p - F::one()) * (xi - yi);
                acc + term.max(F::zero())
            }),
            Kernel::Sum(ks) => {
                let mut acc = F::zero();
                for k in ks {
                    acc += k.bregman(x, y)?;
                }
                acc
            }
            Kernel::FPlusRidge { f, kappa } => {
                let diff = &x - &y;
                let df = f.value(x)? - f.value(y)? - f.gradient(y)?.dot(&diff);
                df + F::lit(0.5) * *kappa * diff.dot(&diff)
            }
        })
    }

    /// Second-order approximate Bregman distance `½⟨∇²φ(y)(x − y), x − y⟩`.
    pub fn approx_bregman(&self, x: ArrayView1<F>, y: ArrayView1<F>) -> Result<F> {
        check_len(x.len(), y.len())?;
        let diff = &x - &y;
        let hd = self.phi_hessian_apply(y, diff.view())?;
        Ok(F::lit(0.5) * hd.dot(&diff))
    }
}

#[inline]
fn xlogx<F: Real>(v: F) -> F {
    if v == F::zero() {
        F::zero()
    } else {
        v * v.ln()
    }
}

#[inline]
fn p_power_second<F: Real>(v: F, p: F, weight: F) -> F {
    if weight == F::zero() {
        return F::zero();
    }
    let two = F::lit(2.0);
    if v == F::zero() {
        return if p < two {
            F::infinity()
        } else if p == two {
            weight
        } else {
            F::zero()
        };
    }
    weight * (p - F::one()) * v.abs().powf(p - two)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn values_on_named_examples() {
        let sq = Kernel::<f64>::squared_euclidean();
        assert_eq!(sq.phi_value(array![1.0, 2.0].view()).unwrap(), 2.5);
        let sh = Kernel::<f64>::shannon_entropy();
        assert_eq!(sh.phi_value(array![1.0, 0.0].view()).unwrap(), 0.0);
        let pp = Kernel::p_power(2.0, 1.0).unwrap();
        assert_eq!(pp.phi_value(array![3.0].view()).unwrap(), 4.5);
    }

    #[test]
    fn entropy_domain_errors() {
        let sh = Kernel::<f64>::shannon_entropy();
        assert!(matches!(sh.phi_value(array![-1.0].view()), Err(Error::Domain(_))));
        assert!(matches!(sh.phi_gradient(array![0.0].view()), Err(Error::Domain(_))));
        let burg = Kernel::<f64>::burg_entropy();
        assert!(matches!(burg.phi_value(array![0.0, 1.0].view()), Err(Error::Domain(_))));
    }

    #[test]
    fn gradients_on_named_examples() {
        let k = Kernel::lp_composite(1.5).unwrap();
        let g = k.phi_gradient(array![1.0, -1.0].view()).unwrap();
        assert_eq!(g, array![2.0, -2.0]);
        let sh = Kernel::<f64>::shannon_entropy();
        assert_eq!(sh.phi_gradient(array![1.0].view()).unwrap(), array![1.0]);
        let sq = Kernel::<f64>::squared_euclidean();
        assert_eq!(sq.phi_gradient(array![0.0, 0.0].view()).unwrap(), array![0.0, 0.0]);
    }

    #[test]
    fn hessian_diagonals() {
        let k = Kernel::lp_composite(3.0).unwrap();
        assert_eq!(k.phi_hessian_diag(array![1.0].view()).unwrap(), array![3.0]);
        let e = Kernel::<f64>::entropy_ridge();
        assert_eq!(e.phi_hessian_diag(array![0.5].view()).unwrap(), array![3.0]);
        let sq = Kernel::<f64>::squared_euclidean();
        assert_eq!(sq.phi_hessian_diag(array![7.0, -2.0].view()).unwrap(), array![1.0, 1.0]);
    }

    #[test]
    fn p_power_sentinel_at_zero() {
        let k = Kernel::lp_composite(1.5).unwrap();
        let h = k.phi_hessian_diag_sentinel(array![0.0, 1.0].view()).unwrap();
        assert_eq!(h[0], f64::INFINITY);
        assert!(matches!(k.phi_hessian_diag(array![0.0, 1.0].view()), Err(Error::SingularHessian(_))));
    }

    #[test]
    fn bregman_examples() {
        let sq = Kernel::<f64>::squared_euclidean();
        assert_eq!(sq.bregman(array![1.0, 2.0].view(), array![0.0, 0.0].view()).unwrap(), 2.5);
        assert_eq!(sq.approx_bregman(array![1.0, 2.0].view(), array![0.0, 0.0].view()).unwrap(), 2.5);

        let sh = Kernel::<f64>::shannon_entropy();
        let d = sh.bregman(array![2.0].view(), array![1.0].view()).unwrap();
        assert!((d - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        let da = sh.approx_bregman(array![2.0].view(), array![1.0].view()).unwrap();
        assert!((da - 0.5).abs() < 1e-15);

        let x = array![0.3, 1.7];
        for k in [Kernel::lp_composite(1.1).unwrap(), Kernel::entropy_ridge(), Kernel::burg_entropy()] {
            assert_eq!(k.bregman(x.view(), x.view()).unwrap(), 0.0);
            assert_eq!(k.approx_bregman(x.view(), x.view()).unwrap(), 0.0);
        }
    }

    #[test]
    fn sum_domain_and_sigma() {
        let k = Kernel::<f64>::entropy_ridge();
        assert_eq!(k.domain(), Domain::NonnegativeOrthantClosure);
        assert_eq!(k.strong_convexity(), 1.0);
        let k = Kernel::<f64>::sum(vec![Kernel::burg_entropy(), Kernel::shannon_entropy()]).unwrap();
        assert_eq!(k.domain(), Domain::PositiveOrthant);
        let k = Kernel::<f64>::shannon_entropy().with_ridge(0.25).unwrap();
        assert_eq!(k.strong_convexity(), 0.25);
    }

    #[test]
    fn fixed_quadratic_validation() {
        assert!(Kernel::fixed_quadratic(array![[1.0, 2.0], [0.0, 1.0]]).is_err());
        assert!(Kernel::fixed_quadratic(array![[1.0, 2.0], [2.0, 1.0]]).is_err());
        let k = Kernel::fixed_quadratic(array![[2.0f64, 0.0], [0.0, 3.0]]).unwrap();
        assert!((k.strong_convexity() - 2.0).abs() < 1e-9);
        assert!(!k.is_separable());
        assert!(k.phi_hessian_diag(array![1.0, 1.0].view()).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Kernel::p_power(1.0, 1.0).is_err());
        assert!(Kernel::p_power(1.5, -1.0).is_err());
        assert!(Kernel::<f64>::sum(vec![]).is_err());
    }
}
