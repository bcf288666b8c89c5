use crate::array::Key;

/// Errors raised by the labeling structures, the reductions and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A structure's internal state is inconsistent. Always a bug.
    #[error("internal corruption: {0}")]
    Corruption(String),

    #[error("capacity exceeded: {needed} elements do not fit in {available} slots")]
    Capacity { needed: usize, available: usize },

    #[error("key {0} is already present")]
    DuplicateKey(Key),

    #[error("key {0} is not present")]
    MissingKey(Key),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A structural invariant failed during a checked run.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("workload: {0}")]
    Workload(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn corruption(msg: impl Into<String>) -> Self {
        Error::Corruption(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// True for errors that indicate a broken structure rather than bad input.
    pub fn is_integrity_failure(&self) -> bool {
        matches!(self, Error::Corruption(_) | Error::Invariant(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
