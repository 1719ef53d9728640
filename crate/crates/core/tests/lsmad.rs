mod common;

use std::sync::Arc;

use bregman_kit::{check_lsmad_sampled, lsmad_constant, Kernel64, SmoothObjective64};
use common::*;
use ndarray::Array1;
use rand::Rng;

const PAIRS: usize = 1000;

fn pairs(r: &mut rand_chacha::ChaCha8Rng, n: usize, positive: bool) -> Vec<(Array1<f64>, Array1<f64>)> {
    (0..PAIRS)
        .map(|_| {
            let scale = 10f64.powf(r.gen_range(-2.0..1.0));
            if positive {
                (positive_vec(r, n, 1e-3, 1.0) * scale, positive_vec(r, n, 1e-3, 1.0) * scale)
            } else {
                (normal_vec(r, n) * scale, normal_vec(r, n) * scale)
            }
        })
        .collect()
}

#[test]
fn lp_least_squares_certificate() {
    let mut r = rng(31);
    let a = normal_mat(&mut r, 12, 8);
    let b = normal_vec(&mut r, 12);
    let f = SmoothObjective64::lp_least_squares(a, b, 0.05, 1.1).unwrap();
    let k = Kernel64::lp_composite(1.1).unwrap();
    let l = lsmad_constant(&f, &k).unwrap();
    let p = pairs(&mut r, 8, false);
    let report = check_lsmad_sampled(&f, &k, l, &p);
    assert_eq!(report.checked, PAIRS);
    assert!(report.passed(), "{:?}", report.violations.first());

    let understated = check_lsmad_sampled(&f, &k, l / 10.0, &p);
    assert!(!understated.violations.is_empty());
}

#[test]
fn lp_least_squares_constant_matches_eigen_oracle() {
    let mut r = rng(32);
    let a = normal_mat(&mut r, 9, 6);
    let f = SmoothObjective64::lp_least_squares(a.clone(), normal_vec(&mut r, 9), 0.3, 1.5).unwrap();
    let l = lsmad_constant(&f, &Kernel64::lp_composite(1.5).unwrap()).unwrap();
    let top = *jacobi_eigenvalues(a.t().dot(&a)).last().unwrap();
    assert!((l - (top + 0.3)).abs() <= 1e-8 * top);
}

#[test]
fn lp_loss_with_ridge_kernel_certificate() {
    let mut r = rng(33);
    let a = normal_mat(&mut r, 12, 6);
    let b = normal_vec(&mut r, 12);
    let f = Arc::new(SmoothObjective64::lp_loss(a, b, 1.1).unwrap());
    let k = Kernel64::f_plus_ridge(f.clone(), 1.0).unwrap();
    assert_eq!(lsmad_constant(&f, &k).unwrap(), 1.0);
    let report = check_lsmad_sampled(&f, &k, 1.0, &pairs(&mut r, 6, false));
    assert!(report.passed(), "{:?}", report.violations.first());
}

#[test]
fn kl_with_entropy_kernels_certificate() {
    let mut r = rng(34);
    let a = stochastic_columns(&mut r, 15, 6);
    let b = positive_vec(&mut r, 15, 0.01, 1.0);
    let f = SmoothObjective64::kl_linear(a, b).unwrap();
    let p = pairs(&mut r, 6, true);
    for k in [Kernel64::shannon_entropy(), Kernel64::entropy_ridge()] {
        assert_eq!(lsmad_constant(&f, &k).unwrap(), 1.0);
        let report = check_lsmad_sampled(&f, &k, 1.0, &p);
        assert_eq!(report.checked, PAIRS);
        assert!(report.passed(), "{:?}", report.violations.first());
    }
}
