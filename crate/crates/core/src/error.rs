use thiserror::Error;

/// Errors produced by the factorizations, solvers and problem builders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular (pivot {pivot:e} at step {step})")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at step {step})")]
    NotPositiveDefinite { step: usize, pivot: f64 },

    #[error("entry ({row}, {col}) lies outside the declared bandwidth {bandwidth}")]
    BandViolation {
        row: usize,
        col: usize,
        bandwidth: usize,
    },

    #[error("eigenvalue iteration did not converge after {iterations} QR sweeps")]
    NoConvergence { iterations: usize },

    #[error("incomplete Cholesky broke down after {attempts} diagonal shifts (last shift {shift:e})")]
    Breakdown { attempts: usize, shift: f64 },

    #[error("preconditioner is not positive definite: <z, M^-1 z> = {0:e}")]
    IndefinitePreconditioner(f64),

    #[error("operator is not symmetric: |<Ax,y> - <x,Ay>| = {0:e}")]
    NotSymmetric(f64),

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("dense dimension {dim} exceeds the cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("first-order expansion is degenerate at lambda0 = {0}")]
    DegenerateExpansion(f64),

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
