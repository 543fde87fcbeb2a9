use thiserror::Error;

/// Errors raised by tree, tensor, variety and witness operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Random sampling kept producing non-generic data at `vertex`.
    #[error("sampling failure at vertex {vertex} after {attempts} attempts")]
    SamplingFailure { vertex: usize, attempts: usize },

    /// Numerical breakdown, e.g. a subspace nesting that fails beyond tolerance.
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    /// A witness construction failed its own exact rank check.
    #[error("construction failure: {}", trace.join(" -> "))]
    ConstructionFailure { trace: Vec<String> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
