use thiserror::Error;

use crate::sigmf::SigmfError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input too short: need at least {needed} samples, got {got}")]
    EmptyInput { needed: usize, got: usize },

    #[error("invalid profile `{name}`: {reason}")]
    Profile { name: String, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("geometry mismatch: expected {expected_frames}x{expected_bins}, got {frames}x{bins}")]
    GeometryMismatch {
        expected_frames: usize,
        expected_bins: usize,
        frames: usize,
        bins: usize,
    },

    #[error("malformed mask file: {0}")]
    MaskFormat(String),

    #[error(transparent)]
    Sigmf(#[from] SigmfError),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::File {
            path: path.display().to_string(),
            source,
        }
    }
}
