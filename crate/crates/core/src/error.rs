use thiserror::Error;

use crate::spin::HalfInt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin quantum numbers: {0}")]
    Domain(String),

    /// A caller broke an internal contract, e.g. combined a state and a
    /// generator built for different domain pairs.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("integration failed after t = {t_last_good} s: {reason}")]
    Integration { t_last_good: f64, reason: String },

    #[error("numerical corruption: {0}")]
    NumericalCorruption(String),

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("relaxation time unavailable: {0}")]
    NotConverged(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { key: key.into(), message: message.into() }
    }

    pub(crate) fn out_of_range(j: HalfInt, m: HalfInt) -> Self {
        Error::Domain(format!("m = {m} is not a valid projection for j = {j}"))
    }
}
