use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("target column `{0}` not found")]
    MissingTarget(String),
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("requested {requested} rows but the dataset has {available}")]
    TooManyShots { requested: usize, available: usize },
    #[error("row index {0} out of range")]
    RowOutOfRange(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("fit rows must not be empty")]
    EmptyFit,
    #[error("selection ratio {0} outside (0, 1]")]
    InvalidRatio(f64),
    #[error("normal equations are numerically rank deficient")]
    RankDeficient,
    #[error("labels must be binary (0/1)")]
    NonBinaryLabels,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("both classes must be present")]
    SingleClass,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("could not parse a score for `{feature}`: {reason}")]
    ParseFailure { feature: String, reason: String },
    #[error("duplicate feature `{0}`")]
    DuplicateFeature(String),
    #[error("missing description for feature `{0}`")]
    MissingDescription(String),
    #[error("no record for method `{method}` on `{block}`")]
    MissingCell { method: String, block: String },
}
