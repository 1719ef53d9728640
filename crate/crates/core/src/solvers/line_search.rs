use ndarray::{Array1, ArrayView1};

use super::SolverConfig;
use crate::directions::DirectionResult;
use crate::error::{Error, Result};
use crate::objectives::CompositeProblem;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome<F> {
    pub t: F,
    pub backtracks: usize,
    pub x: Array1<F>,
    pub psi: F,
}

/// Backtracking on `t ∈ {1, η, η², …}` until
/// `Ψ(x + t d) ≤ Ψ(x) + α t ρ`. Points outside `dom Ψ` are rejected.
///
/// Fails with [`Error::LineSearchFloor`] once `t` would drop below `t_min`.
pub fn line_search<F: Real>(
    problem: &CompositeProblem<F>,
    x: ArrayView1<F>,
    psi_x: F,
    dir: &DirectionResult<F>,
    config: &SolverConfig<F>,
) -> Result<LineSearchOutcome<F>> {
    if dir.d.iter().all(|&di| di == F::zero()) {
        return Ok(LineSearchOutcome { t: F::one(), backtracks: 0, x: x.to_owned(), psi: psi_x });
    }
    let line = problem.f.along(x, dir.d.view())?;
    let mut t = F::one();
    let mut backtracks = 0;
    loop {
        let candidate = line.point(t);
        let g = problem.g.value(candidate.view());
        if g.is_finite() {
            if let Ok(fv) = line.value(t) {
                let psi = fv + g;
                if psi.is_finite() && psi <= psi_x + config.alpha * t * dir.rho {
                    return Ok(LineSearchOutcome { t, backtracks, x: candidate, psi });
                }
            }
        }
        t = t * config.eta;
        backtracks += 1;
        if t < config.t_min {
            return Err(Error::LineSearchFloor(config.t_min.to_f64_lossy()));
        }
    }
}
