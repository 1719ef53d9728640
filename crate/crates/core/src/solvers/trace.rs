use std::time::Instant;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parameters shared by all solver loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<F> {
    /// Stepsize `λ`; `None` means `1/L` from the L-smad certificate.
    pub lambda: Option<F>,
    /// Sufficient-decrease fraction `α ∈ (0, 1)`.
    pub alpha: F,
    /// Backtracking factor `η ∈ (0, 1)`.
    pub eta: F,
    /// Ridge weight `κ` of the regularized Newton kernel.
    pub kappa: F,
    pub max_iter: usize,
    /// Stop when `‖x^k − x^{k−1}‖ ≤ tol`.
    pub tol: F,
    /// Smallest admissible line-search step.
    pub t_min: F,
    pub seed: u64,
}

impl<F: Real> Default for SolverConfig<F> {
    fn default() -> Self {
        Self {
            lambda: None,
            alpha: F::lit(0.99),
            eta: F::lit(0.9),
            kappa: F::lit(1e-5),
            max_iter: 1000,
            tol: F::lit(1e-6),
            t_min: F::lit(1e-10),
            seed: 0,
        }
    }
}

impl<F: Real> SolverConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: F| v > F::zero() && v < F::one();
        let bad = |what: &str, v: F| Err(Error::InvalidParameter(format!("{what} out of range: {v}")));
        if let Some(l) = self.lambda {
            if !(l > F::zero()) || !l.is_finite() {
                return bad("lambda", l);
            }
        }
        if !unit(self.alpha) {
            return bad("alpha", self.alpha);
        }
        if !unit(self.eta) {
            return bad("eta", self.eta);
        }
        if !(self.kappa > F::zero()) {
            return bad("kappa", self.kappa);
        }
        if !(self.tol >= F::zero()) {
            return bad("tol", self.tol);
        }
        if !unit(self.t_min) {
            return bad("t_min", self.t_min);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    LineSearchFloor,
    DomainFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::LineSearchFloor => "line_search_floor",
            Status::DomainFailure => "domain_failure",
        }
    }
}

/// One accepted iteration `x^{k−1} → x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<F> {
    pub k: usize,
    /// `Ψ(x^k)`.
    pub psi: F,
    /// `‖x^k − x^{k−1}‖`.
    pub step_norm: F,
    /// `‖d^{k−1}‖`.
    pub direction_norm: F,
    /// Accepted step `t ∈ (0, 1]` (for PGL: `L₀/L_k`).
    pub t: F,
    pub backtracks: usize,
    /// Model decrease `ρ` of the direction (0 where not applicable).
    pub rho: F,
    /// `⟨∇²φ(x)d, d⟩` of the direction (0 where not applicable).
    pub curvature: F,
    /// `‖x^k − x*‖` when the ground truth is known.
    pub accuracy: Option<F>,
    /// `|aᵀx^k − γ|` under an affine equality constraint.
    pub constraint_residual: Option<F>,
    /// `min_i x^k_i`, for watching interior iterates.
    pub min_entry: F,
    /// Milliseconds since the start of the run (monotonic clock).
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace<F> {
    pub initial_psi: F,
    pub initial_accuracy: Option<F>,
    pub records: Vec<StepRecord<F>>,
    pub final_x: Array1<F>,
    pub status: Status,
    /// Stepsize `λ` the run used.
    pub lambda: F,
    /// Non-fatal events (e.g. exponent clamping in the entropy update).
    pub warnings: Vec<String>,
}

impl<F: Real> IterateTrace<F> {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_psi(&self) -> F {
        self.records.last().map_or(self.initial_psi, |r| r.psi)
    }

    pub fn final_accuracy(&self) -> Option<F> {
        self.records.last().map_or(self.initial_accuracy, |r| r.accuracy)
    }

    pub fn total_backtracks(&self) -> usize {
        self.records.iter().map(|r| r.backtracks).sum()
    }

    /// Whether `Ψ` never increased along the accepted iterates.
    pub fn is_monotone(&self) -> bool {
        let mut prev = self.initial_psi;
        self.records.iter().all(|r| {
            let ok = r.psi <= prev;
            prev = r.psi;
            ok
        })
    }
}

/// Accumulates records for a run.
pub(crate) struct Recorder<F> {
    start: Instant,
    initial_psi: F,
    initial_accuracy: Option<F>,
    records: Vec<StepRecord<F>>,
    warnings: Vec<String>,
}

impl<F: Real> Recorder<F> {
    pub(crate) fn new(initial_psi: F, initial_accuracy: Option<F>, capacity: usize) -> Self {
        Self {
            start: Instant::now(),
            initial_psi,
            initial_accuracy,
            records: Vec::with_capacity(capacity),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }

    pub(crate) fn push(&mut self, mut record: StepRecord<F>) {
        record.k = self.records.len() + 1;
        record.wall_ms = self.elapsed_ms();
        self.records.push(record);
    }

    pub(crate) fn warn(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    pub(crate) fn finish(self, final_x: Array1<F>, status: Status, lambda: F) -> IterateTrace<F> {
        IterateTrace {
            initial_psi: self.initial_psi,
            initial_accuracy: self.initial_accuracy,
            records: self.records,
            final_x,
            status,
            lambda,
            warnings: self.warnings,
        }
    }
}
