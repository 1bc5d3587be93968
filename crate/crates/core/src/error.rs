use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A lattice index or parameter lies outside its admissible range.
    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },

    /// Two containers that must agree in size do not.
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },

    /// A precondition on a real parameter is violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature ran out of budget before meeting its tolerance.
    #[error("no convergence after {panels} panels: value {value}, error estimate {error_estimate:e}")]
    Convergence {
        value: Complex64,
        error_estimate: f64,
        panels: usize,
    },

    /// The grid cannot resolve the requested object.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A construction degenerated (e.g. a projection collapsed to zero).
    #[error("degenerate construction: {0}")]
    Degenerate(String),

    /// Request exceeds what the implementation supports.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Returns a domain error unless `cond` holds.
pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
