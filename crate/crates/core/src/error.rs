use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested computation exceeds a configured work or memory budget.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    /// A quadrature did not stabilise under resolution doubling.
    #[error("quadrature did not converge: {coarse} vs {fine} (relative change {change:.3e})")]
    Convergence { coarse: String, fine: String, change: f64 },

    /// The quantity is undefined for this input, e.g. an average over an empty sphere.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
