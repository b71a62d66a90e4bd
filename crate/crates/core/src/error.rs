//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("ragged row at line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("degenerate dataset: only one class present")]
    DegenerateDataset,

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("split produced an empty {split} set")]
    EmptySplit { split: &'static str },

    #[error("class {class} missing from the {split} split")]
    MissingClass { class: usize, split: &'static str },

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("kernel value {0} outside [-1, 1]")]
    KernelValueOutOfRange(f64),

    #[error("no admissible samples for landmark loss")]
    NoAdmissibleSamples,

    #[error("single-class input: a binary classifier needs both labels")]
    SingleClassInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
