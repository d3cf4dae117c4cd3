//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A line of an input file failed to parse or violated a record
    /// invariant. `field` names the offending field when known.
    #[error("{path}:{line}: invalid {field}: {message}")]
    Record {
        path: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("vocabulary is empty")]
    EmptyVocabulary,

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("class count for {class} examples is zero")]
    ZeroClassCount { class: &'static str },

    #[error("model is not trained")]
    NotTrained,

    #[error("objective became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error(
        "feature {index} has non-binary value {value}; the transform is defined on binary vectors"
    )]
    NonBinaryFeature { index: usize, value: f64 },

    #[error("scores and labels have different lengths ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },

    #[error("{0}")]
    SingleClassEval(String),

    #[error("review {review_id} references unknown product {product_id}")]
    UnknownProduct {
        review_id: String,
        product_id: String,
    },

    #[error("group {0:?} contains no reviews")]
    EmptyGroup(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn record(
        path: &std::path::Path,
        line: usize,
        field: &str,
        message: impl Into<String>,
    ) -> Self {
        Error::Record {
            path: path.display().to_string(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn param(name: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            message: message.into(),
        }
    }
}
