use std::io;

use thiserror::Error;

/// Errors produced by the `slcode` library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// A preset name, file or parameter set does not describe a usable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A generator could not be turned into a code (e.g. rank-deficient matrix).
    #[error("construction error: {0}")]
    Construction(String),

    /// The operation is not defined for this kind of input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Randomized codebook search ran out of candidate draws.
    #[error("search failure: found {found} of {wanted} words after {draws} draws")]
    SearchFailure {
        found: usize,
        wanted: usize,
        draws: u64,
    },

    /// A file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
