use thiserror::Error;

/// Errors raised by the model, solvers and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor argument violates the owning type's invariants.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation was called in a way its contract does not allow.
    #[error("usage error: {0}")]
    Usage(String),

    /// The first-passage law has no finite mean (zero drift).
    #[error("infinite mean: the zero-drift first-passage law has a divergent mean")]
    InfiniteMean,

    /// A numerical precondition of a solver is not met.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Checks `value > 0` and finite.
pub(crate) fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// Checks `value >= 0` and finite.
pub(crate) fn non_negative(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(
            field,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}
