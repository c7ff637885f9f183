use thiserror::Error;

/// Errors raised by model construction, configuration validation and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inertia matrix is singular; check the model parameters")]
    SingularInertia,

    #[error("invalid {field}: {constraint}")]
    InvalidParameter {
        field: &'static str,
        constraint: String,
    },

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("delay buffer for {signal} holds {actual} samples, need {required}")]
    DelayBuffer {
        signal: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("state component {index} reached {value:e} at t = {t}; run diverged")]
    Diverged { t: f64, index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, constraint: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        constraint: constraint.into(),
    }
}
