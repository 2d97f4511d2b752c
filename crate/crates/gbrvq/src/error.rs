//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector length does not match the expected dimensionality.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Like [`Error::Dimension`] but naming the offending frame in a corpus.
    #[error("frame {frame}: dimension mismatch: expected {expected}, got {got}")]
    FrameDimension {
        frame: usize,
        expected: usize,
        got: usize,
    },

    /// A configuration constraint is violated; the message names it.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation that needs at least one element got none.
    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Training corpus is smaller than the codebook it should fill.
    #[error("insufficient data: need at least {needed} frames, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Integer arithmetic left the 64-bit range.
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),

    /// A file does not match its format definition.
    #[error("format error: {0}")]
    Format(String),

    /// Stored checksum or padding check failed.
    #[error("corrupt data: {0}")]
    Corrupt(String),

    /// File ended before the declared payload.
    #[error("truncated input: expected {expected} bytes, got {got}")]
    Truncated { expected: u64, got: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for configuration-class errors (as opposed to data/format errors).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Overflow(_))
    }
}
