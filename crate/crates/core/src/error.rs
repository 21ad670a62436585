use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The variants are grouped so that a front end can map them onto a small set
/// of exit codes: validation problems, I/O and file-format problems, and
/// numerical failures.
#[derive(Debug, Error)]
pub enum NlosError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("index {index} out of range for axis of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unsupported capture topology: {0}")]
    Unsupported(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad magic bytes: expected {expected:?}")]
    BadMagic { expected: String },

    #[error("format version mismatch: file has {found}, reader supports {supported}")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl NlosError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        NlosError::Invalid(msg.into())
    }

    /// Process exit code for this error class (1 validation, 2 I/O, 3 numerical).
    pub fn exit_code(&self) -> i32 {
        match self {
            NlosError::Invalid(_)
            | NlosError::IndexOutOfRange { .. }
            | NlosError::Unsupported(_)
            | NlosError::ShapeMismatch(_) => 1,
            NlosError::BadMagic { .. }
            | NlosError::VersionMismatch { .. }
            | NlosError::TruncatedPayload { .. }
            | NlosError::Header(_)
            | NlosError::Io(_) => 2,
            NlosError::Numerical(_) => 3,
        }
    }
}

pub type Result<T, E = NlosError> = std::result::Result<T, E>;
