use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = QuillError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QuillError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),

    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: u64, message: String },

    #[error("unknown label `{value}` at row {row}")]
    UnknownLabel { row: u64, value: String },

    #[error("duplicate record id `{id}` at row {row}")]
    DuplicateId { row: u64, id: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} predictions vs {right} truths")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid model file: {0}")]
    Format(String),

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("truncated model file: {0}")]
    Truncated(String),

    #[error("{what} hash mismatch: expected {expected}, found {found}")]
    HashMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),
}

impl QuillError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QuillError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used as the CLI error prefix.
    pub fn code(&self) -> &'static str {
        match self {
            QuillError::Io { .. } => "io",
            QuillError::MissingColumn(_) => "missing-column",
            QuillError::Csv { .. } => "csv",
            QuillError::UnknownLabel { .. } => "unknown-label",
            QuillError::DuplicateId { .. } => "duplicate-id",
            QuillError::Empty(_) => "empty",
            QuillError::InvalidParameter(_) => "invalid-parameter",
            QuillError::DimensionMismatch { .. } => "dimension-mismatch",
            QuillError::LengthMismatch { .. } => "length-mismatch",
            QuillError::Format(_) => "format",
            QuillError::UnsupportedVersion(_) => "unsupported-version",
            QuillError::Checksum { .. } => "checksum",
            QuillError::Truncated(_) => "truncated",
            QuillError::HashMismatch { .. } => "hash-mismatch",
            QuillError::Config(_) => "config",
            QuillError::Locked(_) => "locked",
        }
    }
}
