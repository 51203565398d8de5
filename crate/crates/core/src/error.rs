use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid attribute `{name}`: {reason}")]
    InvalidAttribute { name: String, reason: String },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("category index {index} out of range for cardinality {cardinality}")]
    CategoryOutOfRange { index: usize, cardinality: usize },

    #[error("unknown label `{label}` for attribute `{attribute}`")]
    UnknownLabel { attribute: String, label: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid binning: {0}")]
    InvalidBinning(String),

    #[error("value {value} outside binning range [{low}, {high}]")]
    OutOfRange { value: f64, low: f64, high: f64 },

    #[error("non-monotone cdf at edge {edge}")]
    NonMonotoneCdf { edge: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {layer} (channel {channel:?})")]
    NonFinite {
        layer: &'static str,
        channel: Option<String>,
    },

    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("quality improvement undefined: baseline quality is zero")]
    UndefinedImprovement,

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
