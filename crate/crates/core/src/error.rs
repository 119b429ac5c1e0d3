use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading, validating, or comparing neurons.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate sample id {id}")]
    DuplicateId { line: usize, id: i64 },

    #[error("found {count} root records (parent id -1), expected exactly one")]
    MultiRoot { count: usize },

    #[error("tree structure: {0}")]
    Structure(String),

    #[error("target sample count {target} is below the path's {vertices} vertices")]
    InsufficientTarget { target: usize, vertices: usize },

    #[error("path has a zero-length segment at vertex {index}")]
    ZeroLength { index: usize },

    #[error("zero velocity at sample {index}")]
    ZeroVelocity { index: usize },

    #[error("neuron {neuron}, path {path}: {source}")]
    Path {
        neuron: String,
        path: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("stratification: class {0:?} has no cluster members after splitting")]
    Stratification(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
