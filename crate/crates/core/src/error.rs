use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("division by zero: {0}")]
    ZeroDenominator(&'static str),

    #[error("missing measurement settings: {0}")]
    MissingSettings(String),

    #[error("singular design matrix: {0}")]
    Singular(&'static str),

    #[error("event stream for channel {channel} is not sorted at index {index}")]
    Unsorted { channel: char, index: usize },

    #[error("unknown scan parameter `{0}`")]
    UnknownParameter(String),

    #[error("no counts recorded")]
    NoCounts,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Fails with [`Error::InvalidParameter`] unless `value` is finite and `>= 0`.
pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::param(name, alloc::format!("must be finite and >= 0, got {value}")))
    }
}

pub(crate) fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::param(name, alloc::format!("must lie in [0, 1], got {value}")))
    }
}
