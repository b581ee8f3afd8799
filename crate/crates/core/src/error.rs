use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate pull request id `{0}`")]
    DuplicateId(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unusable corpus: {0}")]
    UnusableCorpus(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("vocabulary mismatch: model expects {expected}, corpus has {found}")]
    VocabMismatch { expected: String, found: String },

    #[error("collaborator `{0}` reviewed no training documents")]
    NoReviews(String),

    #[error("row {0} has zero sum and cannot be normalized")]
    ZeroRow(usize),

    #[error("no review labels in corpus")]
    NoLabels,

    #[error("pull request `{pr_id}` has no in-vocabulary tokens ({oov_count} out-of-vocabulary)")]
    NoSignal { pr_id: String, oov_count: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("precision is undefined for an empty match set")]
    EmptyMatchSet,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("split: {0}")]
    Split(String),

    #[error("GitHub authentication failed (status {status})")]
    Auth { status: u16 },

    #[error("GitHub rate limit exceeded; resets at unix time {reset}")]
    RateLimited { reset: i64 },

    #[error("HTTP request to {url} failed with status {status}")]
    Http {
        url: String,
        status: u16,
        retryable: bool,
    },

    #[error("transport error for {url}: {message}")]
    Transport { url: String, message: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether retrying the same request later may succeed.
    pub fn is_retryable(&self) -> bool {
        match self {
            Error::Http { retryable, .. } => *retryable,
            Error::RateLimited { .. } | Error::Transport { .. } => true,
            _ => false,
        }
    }
}
