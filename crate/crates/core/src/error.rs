use thiserror::Error;

/// Errors produced by grid construction, field validation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential positivity violated: min(V + C) = {min_value:.6e} below declared floor {floor:.6e}")]
    PositivityViolation { min_value: f64, floor: f64 },

    #[error("operation requires a nonzero field: {0}")]
    ZeroField(String),

    #[error("non-finite value detected at step {step}: {context}")]
    NonFinite { step: usize, context: String },

    #[error("energy descent stalled at iteration {iter}: energy still increasing after {halvings} step halvings")]
    DescentStalled { iter: usize, halvings: u32 },

    #[error("ground state did not converge after {iters} iterations (residual {residual:.3e})")]
    NotConverged { iters: usize, residual: f64 },

    #[error("perturbation size unreachable: {0}")]
    UnreachablePerturbation(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
