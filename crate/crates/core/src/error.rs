//! Error type shared by every module.

use thiserror::Error;

/// Failures raised by samplers, protocols and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Two operands disagree in length.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A wrapped protocol misbehaved; carries the transcript produced so far.
    #[error("protocol fault: {reason} (after {} messages)", transcript.len())]
    ProtocolFault {
        reason: String,
        transcript: Vec<crate::channels::protocol::Message>,
    },
    /// A retry budget was exhausted.
    #[error("retries exhausted: {0}")]
    RetriesExhausted(String),
    /// Configuration text or CLI input could not be interpreted.
    #[error("configuration error: {0}")]
    Config(String),
    /// Writing a report failed.
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
