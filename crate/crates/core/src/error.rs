use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid covariance matrix (min symplectic eigenvalue {min_symplectic_eig})")]
    InvalidCm { min_symplectic_eig: f64 },
    #[error("ill-conditioned input: {0}")]
    IllConditioned(String),
    #[error("matrix is not symplectic (residual {residual:e})")]
    InvalidSymplectic { residual: f64 },
    #[error("matrix is not unitary (residual {residual:e})")]
    InvalidUnitary { residual: f64 },
    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("closest free state is unphysical (b2 = {b2})")]
    UnphysicalOptimizer { b2: f64 },
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
