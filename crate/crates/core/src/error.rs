//! Error type shared by every pipeline stage.

use std::path::PathBuf;

use crate::profile::MarginBox;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Margin detection found no usable profile crossings. Carries the
    /// full-page fallback box so callers can degrade instead of aborting.
    #[error("margins not found: {reason}")]
    MarginsNotFound { reason: String, fallback: MarginBox },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
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
