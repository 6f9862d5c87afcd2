use std::path::PathBuf;

use thiserror::Error;

/// A problem with one named input field, reported back to callers that
/// need per-field messages (the HTTP API answers these with 422).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read '{}': {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("unknown diagnosis '{token}' at row {row}")]
    UnknownDiagnosis { token: String, row: usize },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("zero variance in feature(s): {}", .0.join(", "))]
    ZeroVariance(Vec<String>),

    #[error("arity mismatch: expected {expected} values, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("correlation undefined: {0} is constant")]
    ConstantInput(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need more than k={k} points for k-nearest neighbors, got {points}")]
    TooFewPoints { k: usize, points: usize },

    #[error("interpolation gap {0} outside [0, 1]")]
    GapOutOfRange(f64),

    #[error("labels must contain both classes")]
    SingleClass,

    #[error("label at position {index} is {value}, expected 0 or 1")]
    NonBinaryLabel { index: usize, value: u8 },

    #[error("input is empty")]
    EmptyInput,

    #[error("non-finite value {value} at row {row}, column {column}")]
    NonFinite { row: usize, column: usize, value: f64 },

    #[error("gradient descent diverged at iteration {iteration}: cost kept increasing after {halvings} learning-rate halvings")]
    Divergence { iteration: usize, halvings: usize },

    #[error("malformed ROC curve: {0}")]
    MalformedCurve(String),

    #[error("empty confusion matrix")]
    EmptyConfusion,

    #[error("unsupported schema version {0}")]
    UnsupportedSchema(u32),

    #[error("invalid model artifact: {0}")]
    InvalidArtifact(String),

    #[error("dataset is missing model feature(s): {}", .0.join(", "))]
    FeatureMismatch(Vec<String>),

    #[error("invalid features: {}", format_fields(.0))]
    InvalidFeatures(Vec<FieldError>),

    #[error("malformed report: {0}")]
    MalformedReport(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

fn format_fields(fields: &[FieldError]) -> String {
    fields
        .iter()
        .map(|f| format!("{}: {}", f.field, f.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Strips any pipeline stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| Error::Stage { stage, source: Box::new(source) })
    }
}
