use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid visible vector: {0}")]
    InvalidVector(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("exact enumeration refused: {units} units exceeds the limit of {limit}")]
    EnumerationGuard { units: usize, limit: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("probabilities for {context} sum to {sum}, expected 1")]
    ProbabilitySum { context: String, sum: f64 },

    #[error("split sizes {requested} exceed the {available} available records")]
    SplitTooLarge { requested: usize, available: usize },

    #[error("record does not match intervention filter: {0}")]
    FilterMismatch(String),

    #[error("differences have zero variance")]
    DegenerateVariance,

    #[error("need at least {needed} values, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
