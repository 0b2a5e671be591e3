use std::path::PathBuf;

use thiserror::Error;

use crate::encoding::EncodeFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid factor schema: {0}")]
    Schema(String),

    #[error("{} record(s) failed to encode: {}", .0.len(), summarize_failures(.0))]
    Encoding(Vec<EncodeFailure>),

    #[error("unknown factor '{0}'")]
    UnknownFactor(String),

    #[error("empty projection")]
    EmptyProjection,

    #[error("unsupported sample size {0} (Shapiro-Wilk requires 3 <= n <= 5000)")]
    UnsupportedSampleSize(usize),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("too few vectors: {got} (need at least {need})")]
    TooFewVectors { got: usize, need: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("k exceeds training size: k = {k}, available neighbors = {available}")]
    KTooLarge { k: usize, available: usize },

    #[error("smoothing must be positive, got {0}")]
    InvalidSmoothing(f64),

    #[error("empty evaluation")]
    EmptyEvaluation,

    #[error("length mismatch: {predictions} predictions vs {actuals} actuals")]
    LengthMismatch { predictions: usize, actuals: usize },

    #[error("rating {0} out of range 1–5")]
    RatingOutOfRange(i64),

    #[error("confusion matrix has zero total")]
    ZeroTotal,

    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

fn summarize_failures(failures: &[EncodeFailure]) -> String {
    let shown: Vec<String> = failures.iter().take(10).map(ToString::to_string).collect();
    let mut out = shown.join("; ");
    if failures.len() > shown.len() {
        out.push_str(&format!("; ... and {} more", failures.len() - shown.len()));
    }
    out
}
