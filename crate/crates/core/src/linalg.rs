//! Dense linear algebra helpers: spectral estimates and SPD factorizations.

use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Seed of the start vector used for every spectral estimate in the crate.
pub const POWER_METHOD_SEED: u64 = 0x5eed_0f_b1e6;
pub const POWER_METHOD_TOL: f64 = 1e-10;
pub const POWER_METHOD_MAX_ITER: usize = 5000;

pub fn norm2<F: Real>(x: ArrayView1<F>) -> F {
    x.dot(&x).sqrt()
}

pub fn norm1<F: Real>(x: ArrayView1<F>) -> F {
    x.iter().fold(F::zero(), |acc, &v| acc + v.abs())
}

pub fn norm_inf<F: Real>(x: ArrayView1<F>) -> F {
    x.iter().fold(F::zero(), |acc, &v| acc.max(v.abs()))
}

/// Outcome of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate<F> {
    pub value: F,
    pub iterations: usize,
    /// `false` when `max_iter` was exhausted; `value` is then the last
    /// Rayleigh quotient.
    pub converged: bool,
}

/// Power iteration for the dominant eigenpair of a symmetric positive
/// semidefinite operator of dimension `n`.
///
/// Stops when the relative change of the Rayleigh quotient drops to `tol`.
pub fn power_iteration<F, Op>(
    n: usize,
    apply: Op,
    tol: F,
    max_iter: usize,
    seed: u64,
) -> (PowerEstimate<F>, Array1<F>)
where
    F: Real,
    Op: Fn(ArrayView1<F>) -> Array1<F>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Array1<F> = (0..n)
        .map(|_| F::lit(StandardNormal.sample(&mut rng)))
        .collect();
    let nv = norm2(v.view());
    v /= nv;

    let mut rq = F::zero();
    for it in 1..=max_iter {
        let w = apply(v.view());
        let next = v.dot(&w);
        let nw = norm2(w.view());
        if nw == F::zero() {
            return (
                PowerEstimate { value: F::zero(), iterations: it, converged: true },
                v,
            );
        }
        v = w / nw;
        if it > 1 && (next - rq).abs() <= tol * next.abs() {
            return (PowerEstimate { value: next, iterations: it, converged: true }, v);
        }
        rq = next;
    }
    (PowerEstimate { value: rq, iterations: max_iter, converged: false }, v)
}

/// Estimates `λ_max(AᵀA)` (the squared spectral norm of `A`).
pub fn power_method<F: Real>(a: ArrayView2<F>, tol: F, max_iter: usize) -> Result<PowerEstimate<F>> {
    if a.iter().all(|&v| v == F::zero()) {
        return Err(Error::InvalidParameter("power_method needs a nonzero matrix".into()));
    }
    let (est, _) = power_iteration(
        a.ncols(),
        |v| a.t().dot(&a.dot(&v)),
        tol,
        max_iter,
        POWER_METHOD_SEED,
    );
    Ok(est)
}

const BLOCK: usize = 64;

/// In-place lower Cholesky factorization `A = LLᵀ` of a symmetric positive
/// definite matrix. Only the lower triangle of `a` is read; the strict upper
/// triangle is zeroed on return.
pub fn cholesky_in_place<F: Real>(a: &mut Array2<F>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + BLOCK).min(n);
        factor_diagonal_block(a, k0, k1)?;
        if k1 < n {
            // L21 = A21 L11⁻ᵀ
            for i in k1..n {
                for j in k0..k1 {
                    let mut acc = a[[i, j]];
                    for l in k0..j {
                        acc -= a[[i, l]] * a[[j, l]];
                    }
                    a[[i, j]] = acc / a[[j, j]];
                }
            }
            // A22 -= L21 L21ᵀ, lower block triangle only.
            let panel = a.slice(s![k1.., k0..k1]).to_owned();
            let mut i0 = k1;
            while i0 < n {
                let i1 = (i0 + BLOCK).min(n);
                let rows = panel.slice(s![i0 - k1..i1 - k1, ..]);
                let cols = panel.slice(s![..i1 - k1, ..]);
                let mut target = a.slice_mut(s![i0..i1, k1..i1]);
                general_mat_mul(-F::one(), &rows, &cols.t(), F::one(), &mut target);
                i0 = i1;
            }
        }
        k0 = k1;
    }
    for i in 0..n {
        for j in i + 1..n {
            a[[i, j]] = F::zero();
        }
    }
    Ok(())
}

fn factor_diagonal_block<F: Real>(a: &mut Array2<F>, k0: usize, k1: usize) -> Result<()> {
    for j in k0..k1 {
        let mut d = a[[j, j]];
        for l in k0..j {
            d -= a[[j, l]] * a[[j, l]];
        }
        if !(d > F::zero()) || !d.is_finite() {
            return Err(Error::SingularHessian(format!("non-positive pivot {d} at row {j}")));
        }
        let d = d.sqrt();
        a[[j, j]] = d;
        for i in j + 1..k1 {
            let mut acc = a[[i, j]];
            for l in k0..j {
                acc -= a[[i, l]] * a[[j, l]];
            }
            a[[i, j]] = acc / d;
        }
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve<F: Real>(l: &Array2<F>, b: ArrayView1<F>) -> Array1<F> {
    let n = l.nrows();
    let mut y = b.to_owned();
    for i in 0..n {
        let row = l.row(i);
        let acc = row.slice(s![..i]).dot(&y.slice(s![..i]));
        y[i] = (y[i] - acc) / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= l[[k, i]] * y[k];
        }
        y[i] = acc / l[[i, i]];
    }
    y
}

/// Cholesky factor of an SPD matrix whose diagonal may carry `+∞` entries.
///
/// A `+∞` diagonal entry marks a coordinate with infinite curvature: the
/// corresponding component of every solution is pinned to zero and the row
/// and column are dropped from the factorization.
#[derive(Debug, Clone)]
pub struct SpdFactor<F> {
    n: usize,
    free: Vec<usize>,
    l: Array2<F>,
}

impl<F: Real> SpdFactor<F> {
    pub fn new(h: &Array2<F>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.ncols() });
        }
        let mut free = Vec::with_capacity(n);
        for i in 0..n {
            let d = h[[i, i]];
            if d == F::infinity() {
                continue;
            }
            if !d.is_finite() {
                return Err(Error::SingularHessian(format!("diagonal entry {d} at {i}")));
            }
            free.push(i);
        }
        let mut l = if free.len() == n {
            h.clone()
        } else {
            Array2::from_shape_fn((free.len(), free.len()), |(i, j)| h[[free[i], free[j]]])
        };
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularHessian("non-finite off-diagonal entry".into()));
        }
        cholesky_in_place(&mut l)?;
        Ok(Self { n, free, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: ArrayView1<F>) -> Array1<F> {
        if self.free.len() == self.n {
            return cholesky_solve(&self.l, b);
        }
        let rhs: Array1<F> = self.free.iter().map(|&i| b[i]).collect();
        let sol = cholesky_solve(&self.l, rhs.view());
        let mut out = Array1::zeros(self.n);
        for (k, &i) in self.free.iter().enumerate() {
            out[i] = sol[k];
        }
        out
    }

    /// Smallest eigenvalue of the (free part of the) factored matrix, by
    /// power iteration on its inverse.
    pub fn min_eigenvalue(&self, tol: F, max_iter: usize) -> F {
        if self.free.is_empty() {
            return F::infinity();
        }
        let (est, _) = power_iteration(
            self.l.nrows(),
            |v| cholesky_solve(&self.l, v),
            tol,
            max_iter,
            POWER_METHOD_SEED,
        );
        F::one() / est.value
    }
}
