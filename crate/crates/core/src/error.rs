use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller violated a precondition (wrong dimension, missing factorization, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// An iterative routine failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("unknown id `{0}`")]
    UnknownId(String),
}

pub type Result<T> = std::result::Result<T, Error>;
