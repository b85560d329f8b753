use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid functions do not share a grid")]
    GridMismatch,

    #[error("cell probabilities refer to different partitions")]
    PartitionMismatch,

    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite data value {value} at index {index}")]
    NonFiniteData { index: usize, value: f64 },

    #[error("Gram matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("objective returned {value} at {point:?}")]
    NonFiniteObjective { point: Vec<f64>, value: f64 },

    #[error("optimizer did not converge; best incumbent {best_value} at {best_point:?}")]
    NotConverged { best_point: Vec<f64>, best_value: f64 },

    #[error("covariance factorization failed with jitter up to {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("{}: row {row}: {reason}", path.display())]
    DrawFile {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("evaluating example pair {index}: {source}")]
    ExamplePair {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
