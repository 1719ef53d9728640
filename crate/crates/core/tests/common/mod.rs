#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn normal_mat(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((m, n), || rng.sample::<f64, _>(StandardNormal))
}

pub fn positive_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Nonnegative matrix with columns summing to one.
pub fn stochastic_columns(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    let mut a = normal_mat(rng, m, n).mapv(f64::abs);
    for mut c in a.columns_mut() {
        let s = c.sum();
        c /= s;
    }
    a
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[[i, j]].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Array1<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs())).unwrap();
        if piv != col {
            for k in 0..n {
                a.swap([col, k], [piv, k]);
            }
            b.swap(col, piv);
        }
        for r in col + 1..n {
            let f = a[[r, col]] / a[[col, col]];
            for k in col..n {
                a[[r, k]] -= f * a[[col, k]];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = Array1::zeros(n);
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[[r, k]] * x[k]).sum();
        x[r] = (b[r] - s) / a[[r, r]];
    }
    x
}

/// `[H a; aᵀ 0] [d; μ] = [−λv; 0]` solved as one bordered system.
pub fn kkt_oracle(lambda: f64, v: &Array1<f64>, h: &Array2<f64>, a: &Array1<f64>) -> (Array1<f64>, f64) {
    let n = v.len();
    let mut k = Array2::zeros((n + 1, n + 1));
    k.slice_mut(ndarray::s![..n, ..n]).assign(h);
    for i in 0..n {
        k[[i, n]] = a[i];
        k[[n, i]] = a[i];
    }
    let mut rhs = Array1::zeros(n + 1);
    for i in 0..n {
        rhs[i] = -lambda * v[i];
    }
    let sol = gauss_solve(k, rhs);
    (sol.slice(ndarray::s![..n]).to_owned(), sol[n])
}

pub fn sup_dist(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
