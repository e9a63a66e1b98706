use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (zero inverse, non-symmetric matrix, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition that the library checks and refuses.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Finite differences, closures or exponentials that did not reach their tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The requested (variant, order) combination is not supported.
    #[error("unsupported: {0}")]
    Capability(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Internal consistency check (e.g. a Lie algebra of the wrong dimension).
    #[error("internal consistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
