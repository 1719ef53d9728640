use thiserror::Error;

/// Errors raised by kernels, objectives, direction solvers and solver loops.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("Hessian is singular or non-finite: {0}")]
    SingularHessian(String),
    #[error("no L-smad certificate known for this (objective, kernel) pair")]
    UnsupportedPair,
    #[error("{0} did not converge within {1} iterations")]
    NoConvergence(&'static str, usize),
    #[error("invalid curvature scale at coordinate {0}: {1}")]
    InvalidScale(usize, String),
    #[error("degenerate equality constraint (zero normal vector)")]
    DegenerateConstraint,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line search step fell below t_min = {0}")]
    LineSearchFloor(f64),
    #[error("operation not supported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
