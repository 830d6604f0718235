use thiserror::Error;

/// Errors raised by model construction, optimization and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("coverage truncation too small: tail mass {tail_mass:e} >= 1e-9, need truncation >= {required}")]
    Truncation { tail_mass: f64, required: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("policy invariant violated: {0}")]
    PolicyInvariant(String),

    #[error("mode precondition failed: {0}")]
    Mode(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}
