use thiserror::Error;

pub type Result<T, E = FqeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FqeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("representation mismatch on axis {axis}: expected {expected:?}")]
    Representation {
        axis: usize,
        expected: crate::grid::Repr,
    },

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("success probability {p:.3e} below floor at step {step}")]
    VanishingSuccess { step: usize, p: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl FqeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FqeError::InvalidParameter(msg.into())
    }
}
