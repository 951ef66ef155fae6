use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: expected a square matrix, got {shape:?}")]
    NotSquare { op: &'static str, shape: (usize, usize) },

    #[error("system is singular even after ridge regularization (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("cluster centers collapsed: columns {columns:?} make SᵀS rank deficient")]
    CollapsedCenters { columns: Vec<usize> },

    #[error("invalid network dimensions {dims:?}: {reason}")]
    InvalidDims { dims: Vec<usize>, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} at index {index} is out of range for {k} clusters")]
    LabelOutOfRange { index: usize, label: usize, k: usize },

    #[error("{}:{line}: {message}", path.display())]
    ParseLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: byte offset {offset}: {message}", path.display())]
    ParseBinary {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("{}: truncated payload: expected {expected} bytes, found {actual}", path.display())]
    Truncated {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no samples left after masking unlabeled rows")]
    EmptyDataset,

    #[error("could not place {k} centers at mutual distance {separation} after {attempts} attempts")]
    InfeasiblePlacement {
        k: usize,
        separation: f64,
        attempts: usize,
    },

    #[error("training diverged at epoch {epoch}: loss became {value}")]
    Divergence { epoch: usize, value: f64 },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
