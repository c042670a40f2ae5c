use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input: shapes, non-finite entries, asymmetry.
    #[error("input error: {0}")]
    Input(String),

    /// A request exceeds a configured size limit (word length, truncation window).
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A resolvent was singular at the given point.
    #[error("pole at z = {z:?} (smallest singular value {sigma_min:e})")]
    Pole { z: Vec<Complex64>, sigma_min: f64 },

    /// Parameters outside the domain of an experiment or constructor.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Numerical failure that should not happen on valid input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Capacity(_) => "capacity",
            Error::Pole { .. } => "pole",
            Error::Parameter(_) => "parameter",
            Error::Internal(_) => "internal",
        }
    }
}
