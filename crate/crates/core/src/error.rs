use thiserror::Error;

/// Errors produced by the screening and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Every periodogram ordinate is zero, so max/sum is 0/0.
    #[error("degenerate input: all periodogram ordinates are zero")]
    DegenerateInput,

    /// The null calibration table cannot resolve tail probabilities as small
    /// as the multiple-testing level requires.
    #[error("calibration resolution {resolution:e} exceeds required level {required:e}")]
    Resolution { resolution: f64, required: f64 },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
