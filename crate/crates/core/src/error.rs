use std::io;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("unsupported SEG-Y sample format code {0}")]
    UnsupportedFormat(u16),

    #[error("inconsistent samples per trace at trace {trace}: expected {expected}, found {found}")]
    InconsistentSamples {
        trace: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-rectilinear inline/crossline grid at trace {trace}: {reason}")]
    NonRectilinear { trace: usize, reason: String },

    #[error("IBM float {bits:#010x} at trace {trace} overflows IEEE single precision")]
    IbmOverflow { bits: u32, trace: usize },

    #[error("non-finite amplitude at linear index {0}")]
    NonFinite(usize),

    #[error("bad format: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("threshold too low: {0}")]
    ThresholdTooLow(String),

    #[error("nothing found: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn dim(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
