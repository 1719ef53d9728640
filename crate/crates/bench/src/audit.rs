//! Invariant audits on generated instances.
//!
//! Each check reports its worst slack (tolerance minus the observed
//! error, or the smallest margin of an inequality); a check passes when the
//! slack is nonnegative.

use std::fmt;

use bregman_kit::diagnostics::{
    fd_gradient, fd_hessian_apply, relative_error, FD_GRADIENT_STEP, FD_GRADIENT_TOL, FD_HESSIAN_STEP,
    FD_HESSIAN_TOL,
};
use bregman_kit::directions::{brute_force_direction, OracleConfig};
use bregman_kit::directions::solve_with_curvature;
use bregman_kit::linalg::norm_inf;
use bregman_kit::{abpg_solve, Curvature, Regularizer, check_lsmad_sampled, lsmad_constant, SolverConfig64};
use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::instance::{gen_instance, Family, Instance, InstanceSpec, SpecError};
use crate::rng::{rng_from_seed, Rng};

pub const SAMPLE_POINTS: usize = 100;
pub const LSMAD_PAIRS: usize = 1000;
pub const ORACLE_TOL: f64 = 1e-6;
pub const DESCENT_TOL: f64 = 1e-8;
pub const DESCENT_ITERS: usize = 100;
pub const FAMILY_TOL: f64 = 1e-12;
/// ℓp-loss derivative samples keep every residual above
/// `RESIDUAL_FLOOR · rms(r) / m`.
pub const RESIDUAL_FLOOR: f64 = 0.1;
pub const RESAMPLE_LIMIT: usize = 1000;

/// Deliberate defects, for checking that the audit notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Perturbs the analytic objective gradient by `1e-3` in coordinate 0.
    CorruptGradient,
    /// Uses `L/10` in the descent-lemma check.
    UnderstateL,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    pub n: usize,
    pub m: usize,
    pub p: Option<f64>,
    pub fault: Option<Fault>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { n: 20, m: 30, p: None, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub worst_slack: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub family: Family,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "audit family={} seed={}", self.family, self.seed)?;
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark} {:<20} worst_slack={:.3e} {}", c.name, c.worst_slack, c.detail)?;
        }
        write!(f, "{}", if self.passed() { "all checks passed" } else { "audit FAILED" })
    }
}

fn check(name: &'static str, worst_slack: f64, detail: String) -> CheckResult {
    CheckResult { name, passed: worst_slack >= 0.0, worst_slack, detail }
}

/// Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Array1<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[[i, c]].abs().total_cmp(&a[[j, c]].abs())).unwrap_or(c);
        if piv != c {
            for j in 0..n {
                a.swap([c, j], [piv, j]);
            }
            b.swap(c, piv);
        }
        for r in c + 1..n {
            let factor = a[[r, c]] / a[[c, c]];
            for j in c..n {
                a[[r, j]] -= factor * a[[c, j]];
            }
            b[r] -= factor * b[c];
        }
    }
    let mut x = Array1::zeros(n);
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|j| a[[r, j]] * x[j]).sum();
        x[r] = (b[r] - tail) / a[[r, r]];
    }
    x
}

/// Random point in the interior of the family's domain, entries `O(1)`.
fn sample_point(rng: &mut Rng, n: usize, positive: bool) -> Array1<f64> {
    (0..n)
        .map(|_| {
            if positive {
                rng.gen_range(0.1..1.5)
            } else {
                let z: f64 = StandardNormal.sample(rng);
                z.signum() * (z.abs() + 0.1)
            }
        })
        .collect()
}

fn family_invariants(inst: &Instance) -> CheckResult {
    let spec = &inst.spec;
    let mut errors = vec![];
    let nnz = inst.x_star.iter().filter(|&&v| v != 0.0).count();
    if nnz > spec.support_size() {
        errors.push(format!("x* has {nnz} nonzeros, more than {}", spec.support_size()));
    }
    let mut worst: f64 = 0.0;
    match spec.family {
        Family::NonnegKl => {
            for col in inst.a().columns() {
                worst = worst.max((col.sum() - 1.0).abs());
            }
            if inst.a().iter().any(|&v| v < 0.0) || inst.x_star.iter().any(|&v| v < 0.0) {
                errors.push("negative data".into());
            }
            if inst.x0.iter().any(|&v| v <= 0.0) {
                errors.push("x0 not strictly positive".into());
            }
        }
        Family::LpLsEq => worst = (inst.x0.sum() - 1.0).abs(),
        Family::LpLs | Family::LpLoss => {}
    }
    let slack = if errors.is_empty() { FAMILY_TOL - worst } else { -1.0 };
    check("family-invariants", slack, errors.join("; "))
}

/// Runs every check for the instance of `(family, seed)` at the audit size.
pub fn audit(family: Family, seed: u64, opts: &AuditOptions) -> Result<AuditReport, SpecError> {
    let mut spec = InstanceSpec::new(family, opts.n, opts.m, seed);
    if let Some(p) = opts.p {
        spec.p = p;
    }
    let inst = gen_instance(&spec)?;
    let (f, kernel) = (&inst.problem.f, &inst.problem.kernel);
    let n = spec.n;
    let positive = family == Family::NonnegKl;
    let mut rng = rng_from_seed(seed ^ 0xa0d1_7000);
    let mut checks = vec![family_invariants(&inst)];

    let mut grad_err: f64 = 0.0;
    let mut hess_err: f64 = 0.0;
    let mut kgrad_err: f64 = 0.0;
    let mut khess_err: f64 = 0.0;
    for _ in 0..SAMPLE_POINTS {
        let mut x = sample_point(&mut rng, n, positive);
        if family == Family::LpLoss {
            // |r|^p has a kink at r = 0 where differences are meaningless.
            for _ in 0..RESAMPLE_LIMIT {
                let r = inst.a().dot(&x) - inst.b();
                let floor = RESIDUAL_FLOOR * (r.dot(&r) / r.len() as f64).sqrt() / r.len() as f64;
                if r.iter().all(|ri| ri.abs() >= floor) {
                    break;
                }
                x = sample_point(&mut rng, n, positive);
            }
        }
        let v: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let errs = (|| -> bregman_kit::Result<[f64; 4]> {
            let mut g = f.gradient(x.view())?;
            if opts.fault == Some(Fault::CorruptGradient) {
                g[0] += 1e-3;
            }
            let fd = fd_gradient(|z| f.value(z), x.view(), FD_GRADIENT_STEP)?;
            let fd_h = fd_hessian_apply(|z| f.gradient(z), x.view(), v.view(), FD_HESSIAN_STEP)?;
            let kfd = fd_gradient(|z| kernel.phi_value(z), x.view(), FD_GRADIENT_STEP)?;
            let kfd_h = fd_hessian_apply(|z| kernel.phi_gradient(z), x.view(), v.view(), FD_HESSIAN_STEP)?;
            Ok([
                relative_error(g.view(), fd.view()),
                relative_error(f.hessian_apply(x.view(), v.view())?.view(), fd_h.view()),
                relative_error(kernel.phi_gradient(x.view())?.view(), kfd.view()),
                relative_error(kernel.phi_hessian_apply(x.view(), v.view())?.view(), kfd_h.view()),
            ])
        })()
        .unwrap_or([f64::INFINITY; 4]);
        grad_err = grad_err.max(errs[0]);
        hess_err = hess_err.max(errs[1]);
        kgrad_err = kgrad_err.max(errs[2]);
        khess_err = khess_err.max(errs[3]);
    }
    let rel = |e: f64| format!("max relative error {e:.3e}");
    checks.push(check("objective-gradient", FD_GRADIENT_TOL - grad_err, rel(grad_err)));
    checks.push(check("objective-hessian", FD_HESSIAN_TOL - hess_err, rel(hess_err)));
    checks.push(check("kernel-gradient", FD_GRADIENT_TOL - kgrad_err, rel(kgrad_err)));
    checks.push(check("kernel-hessian", FD_HESSIAN_TOL - khess_err, rel(khess_err)));

    match lsmad_constant(f, kernel) {
        Ok(l) => {
            let l = if opts.fault == Some(Fault::UnderstateL) { l / 10.0 } else { l };
            let pairs: Vec<_> = (0..LSMAD_PAIRS)
                .map(|_| {
                    let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
                    (sample_point(&mut rng, n, positive) * scale, sample_point(&mut rng, n, positive) * scale)
                })
                .collect();
            let r = check_lsmad_sampled(f, kernel, l, &pairs);
            let detail = format!("L={l:.6e}, {} violations in {} pairs", r.violations.len(), r.checked);
            let slack = if r.passed() { r.worst_slack.max(0.0) } else { r.worst_slack.min(-f64::MIN_POSITIVE) };
            checks.push(check("lsmad-sampled", slack, detail));
        }
        Err(e) => checks.push(check("lsmad-sampled", -1.0, e.to_string())),
    }

    // Direction subproblems on a small instance of the same family.
    let small = gen_instance(&InstanceSpec { n: 5, m: 7, ..spec.clone() })?;
    let mut worst: f64 = 0.0;
    let mut first_error = None;
    for _ in 0..10 {
        let x = match family {
            Family::LpLsEq => small.x0.clone() + rng.gen_range(-0.1..0.1),
            _ => sample_point(&mut rng, 5, positive),
        };
        let x = if family == Family::LpLsEq { x.clone() - (x.sum() - 1.0) / 5.0 } else { x };
        let lambda = rng.gen_range(0.1..2.0);
        let err = (|| -> bregman_kit::Result<f64> {
            let v = small.problem.f.gradient(x.view())?;
            let curv = small.problem.kernel.curvature(x.view(), true)?;
            let d = solve_with_curvature(lambda, v.view(), &curv, &small.problem.g, x.view())?.d;
            let oracle = match (&curv, &small.problem.g) {
                // Coordinate descent crawls on dense ill-conditioned
                // Hessians; the unconstrained case is a plain linear solve.
                (Curvature::Dense(h), Regularizer::Zero) => gauss_solve(h / lambda, -&v),
                _ => brute_force_direction(lambda, v.view(), &curv, &small.problem.g, x.view(), &OracleConfig::default())?,
            };
            Ok(norm_inf((&d - &oracle).view()))
        })();
        match err {
            Ok(e) => worst = worst.max(e),
            Err(e) => {
                worst = f64::INFINITY;
                first_error.get_or_insert(e.to_string());
            }
        }
    }
    let detail = match first_error {
        Some(e) => format!("subproblem failed: {e}"),
        None => format!("max sup-norm gap {worst:.3e}"),
    };
    checks.push(check("direction-oracle", ORACLE_TOL - worst, detail));

    let cfg = SolverConfig64 { max_iter: DESCENT_ITERS, ..Default::default() };
    let descent = match abpg_solve(&inst.problem, &cfg, inst.x0.view()) {
        Ok(trace) => {
            let sigma = kernel.strong_convexity();
            let mut prev = trace.initial_psi;
            let mut worst = f64::INFINITY;
            for r in &trace.records {
                let bound = cfg.alpha * sigma * r.t / (2.0 * trace.lambda) * r.direction_norm.powi(2);
                worst = worst.min(prev - r.psi - bound);
                prev = r.psi;
            }
            let worst = if trace.records.is_empty() { 0.0 } else { worst };
            check("descent", worst + DESCENT_TOL, format!("{} ABPG steps, status {}", trace.iterations(), trace.status.as_str()))
        }
        Err(e) => check("descent", -1.0, e.to_string()),
    };
    checks.push(descent);

    Ok(AuditReport { family, seed, checks })
}
