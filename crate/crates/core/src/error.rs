use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure reported by an external model backend (LLM, embedder, NLI, NER).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("rate limited by backend")]
    RateLimited { retry_after: Option<Duration> },
    #[error("backend returned an empty response")]
    EmptyResponse,
    #[error("backend rejected the request: {0}")]
    Rejected(String),
    #[error("malformed backend response: {0}")]
    Malformed(String),
}

impl BackendError {
    /// Whether another attempt might succeed.
    pub fn is_transient(&self) -> bool {
        !matches!(self, BackendError::Rejected(_))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("prompt template is missing the {0} slot")]
    MissingSlot(&'static str),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("generation failed for chunks {failed:?} of {total}")]
    PartialFailure {
        failed: Vec<(usize, BackendError)>,
        total: usize,
    },
    #[error("methods do not cover the same pairs; missing {missing:?}")]
    Coverage { missing: Vec<(String, String)> },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("not enough samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("items have unequal rater counts ({0} vs {1})")]
    UnbalancedRaters(usize, usize),
    #[error("agreement statistic undefined: all ratings fall in one category")]
    DegenerateAgreement,
    #[error("score {0} outside 1..=5")]
    ScoreOutOfRange(u8),
}
