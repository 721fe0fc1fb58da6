use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("structural self-causality on channel {channel}: diagonal of the structural matrix must be zero")]
    SelfStructuralCausality { channel: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("observation window needs {needed} samples, got {got}")]
    IncompleteWindow { needed: usize, got: usize },

    #[error("innovation covariance is numerically singular{}", fmt_step(.step))]
    SingularInnovationCovariance { step: Option<usize> },

    #[error("channel '{channel}' has zero variance")]
    ZeroVarianceChannel { channel: String },

    #[error("series too short: {len} samples, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("regressors for channel {channel} are rank deficient")]
    RankDeficientRegressors { channel: usize },

    #[error("model is unstable: companion spectral radius {radius:.6} >= 1")]
    UnstableModel { radius: f64 },

    #[error("I - S0 is singular (condition number {condition:e})")]
    SingularStructure { condition: f64 },

    #[error("malformed line {line}: '{content}'")]
    MalformedLine { line: usize, content: String },

    #[error("line {line} has {found} columns, expected {expected}")]
    InconsistentColumnCount { line: usize, expected: usize, found: usize },

    #[error("input file contains no samples")]
    EmptyFile,

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("schema violation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_step(step: &Option<usize>) -> String {
    match step {
        Some(n) => format!(" at sample {n}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
