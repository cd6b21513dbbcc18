use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png decode error in {path}: {message}")]
    PngDecode { path: PathBuf, message: String },

    #[error("png encode error: {0}")]
    PngEncode(String),

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error in {context}: {message}")]
    Csv { context: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("empty object: image has no pixels with alpha above the threshold")]
    EmptyObject,

    #[error("mesh load error in {path}: {message}")]
    MeshLoad { path: PathBuf, message: String },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("no occupied voxels in either grid")]
    NoOccupiedVoxels,

    #[error("no evaluable pairs")]
    NoEvaluablePairs,

    #[error("empty point set")]
    EmptyPointSet,

    #[error("invalid mask plan: {0}")]
    InvalidPlan(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub fn csv(context: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Error::Csv {
            context: context.into(),
            message: err.to_string(),
        }
    }
}
