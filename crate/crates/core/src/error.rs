use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology {widths:?}: {reason}")]
    InvalidTopology { widths: Vec<usize>, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("topology mismatch: network has {network:?}, expected {expected:?}")]
    TopologyMismatch {
        network: Vec<usize>,
        expected: Vec<usize>,
    },

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid prune spec: {0}")]
    InvalidPruneSpec(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("malformed data in {path}: {reason}")]
    MalformedData { path: PathBuf, reason: String },

    #[error("class {class} has {count} sample(s); stratified splitting needs at least 2")]
    ClassTooSmall { class: usize, count: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("malformed network dump at line {line}: {reason}")]
    NetworkFormat { line: usize, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedData {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
