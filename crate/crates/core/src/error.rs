use thiserror::Error;

use crate::sdp::SolveStatus;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max |m_ij - conj(m_ji)| = {0:e})")]
    NotHermitian(f64),

    #[error("eigensolver did not converge (off-diagonal norm {0:e})")]
    EigenNoConvergence(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver finished with status {status:?}: {detail}")]
    Solver { status: SolveStatus, detail: String },

    #[error("primal value {primal} and dual value {dual} disagree beyond tolerance")]
    DualityGap { primal: f64, dual: f64 },

    #[error("certificate check failed: {0}")]
    Certificate(String),

    #[error("scan failed: {0}")]
    Scan(String),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
