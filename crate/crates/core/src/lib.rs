//! Approximate Bregman proximal gradient (ABPG) for composite nonconvex
//! problems `min f(x) + g(x)`, with the Euclidean, regularized Newton and
//! entropy Bregman baselines.
//!
//! Every numerical type is generic over [`Real`]; the `*64`/`*32` aliases
//! below fix the scalar.

pub mod diagnostics;
pub mod directions;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod objectives;
pub mod scalar;
pub mod solvers;

pub use diagnostics::{check_lsmad_sampled, LsmadReport, LsmadViolation};
pub use directions::{DirectionResult, AffineKktFactors};
pub use error::{Error, Result};
pub use kernels::{Curvature, Domain, Kernel};
pub use objectives::{lsmad_constant, CompositeProblem, ObjectiveKind, Regularizer, SmoothObjective};
pub use scalar::Real;
pub use solvers::{
    abpg_solve, bpg_solve, line_search, pg_solve, pgl_solve, rn_solve, stationarity_residual, IterateTrace,
    SolverConfig, Status, StepRecord,
};

pub type Kernel64 = Kernel<f64>;
pub type SmoothObjective64 = SmoothObjective<f64>;
pub type Regularizer64 = Regularizer<f64>;
pub type CompositeProblem64 = CompositeProblem<f64>;
pub type DirectionResult64 = DirectionResult<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type IterateTrace64 = IterateTrace<f64>;

pub type Kernel32 = Kernel<f32>;
pub type SmoothObjective32 = SmoothObjective<f32>;
pub type CompositeProblem32 = CompositeProblem<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type IterateTrace32 = IterateTrace<f32>;
