//! Crate-wide error type.

use thiserror::Error;

use crate::corpus::DocId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad file format: {msg}")]
    Format { path: String, msg: String },

    #[error("split fraction must lie in (0,1), got {0}")]
    InvalidFraction(f64),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("document {doc_id} has zero norm")]
    ZeroNorm { doc_id: DocId },

    #[error("k = {k} must satisfy 1 <= k < n = {n}")]
    InvalidK { k: usize, n: usize },

    #[error("document index {index} out of range for {n} documents")]
    DocIndexOutOfRange { index: usize, n: usize },

    #[error("term index {term} out of range for vocabulary of size {vocab}")]
    TermIndexOutOfRange { term: u32, vocab: u32 },

    #[error("node {node} has zero degree (empty similarity row)")]
    ZeroDegree { node: usize },

    #[error("embedding dimension l = {l} must satisfy 1 <= l < n - 1 = {limit}")]
    InvalidDimension { l: usize, limit: usize },

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (max residual {max_residual:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        max_residual: f64,
    },

    #[error("code length {0} outside supported range 1..=64")]
    CodeLength(usize),

    #[error("code length mismatch: {a} vs {b}")]
    CodeLengthMismatch { a: usize, b: usize },

    #[error("radius {radius} exceeds code length {len}")]
    RadiusTooLarge { radius: usize, len: usize },

    #[error("{what}: size mismatch ({left} vs {right})")]
    SizeMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("document {doc_id} carries a non-finite weight on term {term}")]
    NonFinite { doc_id: DocId, term: u32 },

    #[error("document {doc_id} has no topic label")]
    Unlabelled { doc_id: DocId },

    #[error("duplicate doc id {0}")]
    DuplicateDocId(DocId),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: &std::path::Path, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.display().to_string(),
            msg: msg.into(),
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}
