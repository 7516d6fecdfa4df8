use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed XML: {0}")]
    MalformedXml(String),

    #[error("article {0} contains no paragraph text")]
    EmptyArticle(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid split fractions {0:?}: must be non-negative and sum to 1")]
    InvalidFractions([f64; 3]),

    #[error("vocabulary is empty after applying min_df = {0}")]
    EmptyVocabulary(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} sentences")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("training loss became non-finite at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },

    #[error("feature spaces differ: {0}")]
    FeatureSpaceMismatch(String),

    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("current sentence has no tokens")]
    EmptyInput,

    #[error("format mismatch: {0}")]
    FormatMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model file {path}: {reason}")]
    InvalidArtifact { path: PathBuf, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
