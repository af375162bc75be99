use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("node index {index} out of range for {num_nodes} nodes")]
    NodeOutOfRange { index: usize, num_nodes: usize },

    #[error("label {label} at node {node} is not below num_classes = {num_classes}")]
    LabelOutOfRange { node: usize, label: usize, num_classes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index sets overlap at node {0}")]
    OverlappingSets(usize),

    #[error("empty index set: {0}")]
    EmptySet(&'static str),

    #[error("class {class} has {available} nodes, need at least {required}")]
    ClassTooSmall { class: usize, available: usize, required: usize },

    #[error("not a probability matrix: {0}")]
    NotProbability(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("linear system is singular at pivot {0}")]
    Singular(usize),

    #[error("{nodes} nodes exceed the dense solve threshold of {threshold}")]
    TooLargeForDense { nodes: usize, threshold: usize },

    #[error("loss became NaN at epoch {epoch}")]
    NanLoss { epoch: usize },

    #[error("generator failed: {0}")]
    Generator(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }
}
