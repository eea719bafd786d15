use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid cluster tree: {0}")]
    InvalidTree(String),

    #[error("unknown point `{0}`")]
    UnknownPoint(String),

    #[error("invalid branch `{branch}`: {message}")]
    InvalidBranch { branch: String, message: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("trees do not match: {0}")]
    TreeMismatch(String),

    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },

    /// A theorem-backed invariant was violated. Always a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
