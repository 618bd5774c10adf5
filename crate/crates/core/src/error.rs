use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate model: class separation alpha = {alpha:e} (classes coincide)")]
    DegenerateModel { alpha: f64 },

    #[error("covariance is not positive semidefinite: min eigenvalue {min:e}, max {max:e}")]
    NotPsd { min: f64, max: f64 },

    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("untrainable dataset: {0}")]
    Untrainable(String),

    #[error("insufficient replicates: need at least {needed}, got {got}")]
    InsufficientReplicates { needed: usize, got: usize },
}
