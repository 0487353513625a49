use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image of {width}x{height} is too small, need at least {min}x{min}")]
    DimensionTooSmall { width: usize, height: usize, min: usize },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("pyramid with {levels} levels does not fit a {width}x{height} image")]
    TooManyLevels {
        levels: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid upsampling factor {0}")]
    InvalidFactor(usize),

    #[error("malformed {format} data at byte {offset}: {reason}")]
    Malformed {
        format: &'static str,
        offset: usize,
        reason: String,
    },

    #[error("region {index} of the feature grid has no interior pixels")]
    EmptyRegion { index: usize },

    #[error("mask is empty")]
    EmptyMask,

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("no records to label")]
    EmptyRecords,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("every boosting round was rejected")]
    NoValidRound,

    #[error("feature dimension mismatch: model expects {expected}, got {actual}")]
    FeatureDimension { expected: usize, actual: usize },

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("missing resolution data: {0}")]
    MissingResolution(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model format error: {0}")]
    Model(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
