//! Iteration loops: ABPG with its sufficient-decrease line search, the
//! regularized Newton special case, and the PG / PGL / BPG baselines.

mod abpg;
mod baselines;
mod line_search;
mod trace;

pub use abpg::{abpg_solve, rn_solve, stationarity_residual};
pub use baselines::{bpg_solve, pg_solve, pgl_solve, PGL_GROWTH, PGL_MAX_ESTIMATE};
pub use line_search::{line_search, LineSearchOutcome};
pub use trace::{IterateTrace, SolverConfig, Status, StepRecord};
