use thiserror::Error;

/// Errors raised by the solvers, simulators and file loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A Riccati kernel (W) lost strict positivity at step `k`.
    #[error("{which} at step {k} is not positive definite (lambda_min = {lambda_min:e})")]
    NotPositiveDefinite {
        which: &'static str,
        k: usize,
        lambda_min: f64,
    },

    /// The joint second moment of (w_k, v_k) is not positive semidefinite.
    #[error("joint noise second moment at step {k} is not positive semidefinite")]
    InvalidMoment { k: usize },

    #[error("simulated state became non-finite on path {path} at step {k}")]
    NonFinite { path: usize, k: usize },

    #[error("scenario tree too large: {size} exceeds the limit of {limit}")]
    TreeTooLarge { size: usize, limit: usize },

    #[error("stacked control Hessian is singular or indefinite (lambda_min = {lambda_min:e})")]
    SingularTheta2 { lambda_min: f64 },

    #[error("vector is not in the range of the matrix (residual {residual:e})")]
    RangeViolation { residual: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
