use thiserror::Error;

/// Errors raised by the solver and its numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UepError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not Hermitian (relative defect {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive definite (eigenvalue ratio {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("degenerate candidate: {0}")]
    DegenerateCandidate(String),

    #[error("state is not generic: {0}")]
    NotGeneric(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

pub type Result<T> = std::result::Result<T, UepError>;
