use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the EMG pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal of length {len} is shorter than the window length {window_len}")]
    EmptySegmentation { len: usize, window_len: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("unknown wavelet filter `{0}`")]
    UnknownFilter(String),

    #[error("signal length {len} is not usable for a {levels}-level transform: {reason}")]
    BadLength {
        len: usize,
        levels: usize,
        reason: &'static str,
    },

    #[error("number of decomposition levels must be at least 1")]
    BadLevels,

    #[error("inconsistent wavelet decomposition: {0}")]
    BadDecomposition(String),

    #[error("PCA needs at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("bad input: {0}")]
    BadInput(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("empty coefficient band")]
    EmptyBand,

    #[error("label {0} is not one of 0, 1, 2")]
    BadLabel(i64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("training diverged at epoch {epoch}, minibatch {minibatch}")]
    TrainingDiverged { epoch: usize, minibatch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
