use bregman_bench::instance::{gen_instance, project_onto_hyperplane, Family, InstanceSpec, SpecError};
use bregman_bench::rng::rng_from_seed;
use bregman_bench::store::{read_instance, write_instance};
use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

#[test]
fn kl_columns_sum_to_one() {
    let inst = gen_instance(&InstanceSpec::new(Family::NonnegKl, 40, 60, 3)).unwrap();
    for col in inst.a().columns() {
        assert!((col.sum() - 1.0).abs() <= 1e-12);
    }
    assert!(inst.a().iter().all(|&v| v >= 0.0));
    assert!(inst.x_star.iter().all(|&v| v >= 0.0));
    assert!(inst.x0.iter().all(|&v| v > 0.0));
    assert!(inst.b().iter().all(|&v| v > 0.0));
}

#[test]
fn support_sizes_follow_density() {
    for (family, n, expected) in
        [(Family::LpLs, 500, 25), (Family::LpLs, 101, 6), (Family::LpLoss, 500, 50), (Family::NonnegKl, 200, 10)]
    {
        let inst = gen_instance(&InstanceSpec::new(family, n, 30, 1)).unwrap();
        let nnz = inst.x_star.iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nnz, expected, "{family}");
    }
}

#[test]
fn same_seed_is_bitwise_identical() {
    for family in Family::ALL {
        let spec = InstanceSpec::new(family, 30, 20, 99);
        let (a, b) = (gen_instance(&spec).unwrap(), gen_instance(&spec).unwrap());
        assert_eq!(a.a(), b.a());
        assert_eq!(a.b(), b.b());
        assert_eq!(a.x0, b.x0);
        assert_eq!(a.x_star, b.x_star);
        let other = gen_instance(&InstanceSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(a.a(), other.a());
    }
}

#[test]
fn equality_family_starts_feasible() {
    let inst = gen_instance(&InstanceSpec::new(Family::LpLsEq, 64, 40, 5)).unwrap();
    assert!((inst.x0.sum() - 1.0).abs() <= 1e-12);
    assert!(inst.problem.psi_value(inst.x0.view()).is_finite());
}

#[test]
fn ground_truth_reproduces_data() {
    for family in Family::ALL {
        let inst = gen_instance(&InstanceSpec::new(family, 25, 35, 8)).unwrap();
        let r = inst.a().dot(&inst.x_star) - inst.b();
        assert!(r.iter().all(|v| v.abs() <= 1e-12));
        assert_eq!(inst.problem.accuracy(inst.x_star.view()), Some(0.0));
    }
}

#[test]
fn spectral_start_is_aligned_with_the_data() {
    let inst = gen_instance(&InstanceSpec::new(Family::LpLoss, 50, 400, 4)).unwrap();
    assert!(inst.a().dot(&inst.x0).dot(inst.b()) > 0.0);
    let cos = inst.x0.dot(&inst.x_star).abs() / (inst.x0.dot(&inst.x0).sqrt() * inst.x_star.dot(&inst.x_star).sqrt());
    assert!(cos > 0.3, "cos = {cos}");
}

/// `[I a; aᵀ 0] [y; μ] = [x; γ]` solved by elimination.
fn kkt_projection(x: &Array1<f64>, a: &Array1<f64>, gamma: f64) -> Array1<f64> {
    let n = x.len();
    let mut m = Array2::<f64>::zeros((n + 1, n + 2));
    for i in 0..n {
        m[[i, i]] = 1.0;
        m[[i, n]] = a[i];
        m[[n, i]] = a[i];
        m[[i, n + 1]] = x[i];
    }
    m[[n, n + 1]] = gamma;
    for c in 0..=n {
        let piv = (c..=n).max_by(|&i, &j| m[[i, c]].abs().total_cmp(&m[[j, c]].abs())).unwrap();
        for j in 0..n + 2 {
            m.swap([c, j], [piv, j]);
        }
        for r in 0..=n {
            if r != c {
                let f = m[[r, c]] / m[[c, c]];
                for j in c..n + 2 {
                    m[[r, j]] -= f * m[[c, j]];
                }
            }
        }
    }
    (0..n).map(|i| m[[i, n + 1]] / m[[i, i]]).collect()
}

#[test]
fn projection_matches_kkt_oracle() {
    let mut rng = rng_from_seed(17);
    for n in 1..8 {
        let x: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let gamma: f64 = StandardNormal.sample(&mut rng);
        let y = project_onto_hyperplane(x.view(), a.view(), gamma).unwrap();
        assert!((a.dot(&y) - gamma).abs() <= 1e-12);
        let oracle = kkt_projection(&x, &a, gamma);
        assert!((&y - &oracle).iter().all(|v| v.abs() <= 1e-12));
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let base = InstanceSpec::new(Family::LpLs, 10, 10, 0);
    assert!(matches!(gen_instance(&InstanceSpec { n: 0, ..base.clone() }), Err(SpecError::NonPositive("n"))));
    assert!(matches!(gen_instance(&InstanceSpec { density: 1.5, ..base.clone() }), Err(SpecError::Density(_))));
    assert!(matches!(gen_instance(&InstanceSpec { p: 0.5, ..base.clone() }), Err(SpecError::Exponent(_))));
    assert!(matches!(gen_instance(&InstanceSpec { theta1: -1.0, ..base }), Err(SpecError::Negative("theta1"))));
}

#[test]
fn stored_instance_file_round_trips() {
    let inst = gen_instance(&InstanceSpec::new(Family::LpLsEq, 16, 12, 21)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.bin");
    write_instance(&mut std::fs::File::create(&path).unwrap(), &inst).unwrap();
    let back = read_instance(&mut std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back.x0, inst.x0);
    assert_eq!(back.a(), inst.a());
}
