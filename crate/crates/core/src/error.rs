use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the segmentation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PNM header: {0}")]
    MalformedHeader(String),

    #[error("truncated or malformed PNM data: {0}")]
    MalformedData(String),

    #[error("unsupported maxval {0} (must be 1..=65535)")]
    UnsupportedMaxval(u32),

    #[error("expected a {expected} file, found {found}")]
    WrongKind { expected: &'static str, found: String },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("vertex {index} out of range for {len} vertices")]
    OutOfRange { index: usize, len: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid label map: {0}")]
    InvalidLabels(String),

    #[error("label map has {0} labels, more than a 16-bit PGM can hold")]
    TooManyLabels(usize),

    #[error("seed set is empty")]
    EmptySeeds,

    #[error("seed {0} appears more than once")]
    DuplicateSeed(usize),

    #[error("tree is empty")]
    EmptyTree,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
