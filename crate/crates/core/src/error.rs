use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),

    #[error("duplicate entity id {0:?}")]
    DuplicateEntity(String),

    #[error("unknown entity type {0:?}")]
    UnknownEntityType(String),

    #[error("unknown entity {0:?}")]
    UnknownEntity(String),

    #[error("duplicate token {token:?} on line {line}")]
    DuplicateToken { token: String, line: usize },

    #[error("zero vector for token {token:?} on line {line}")]
    ZeroVector { token: String, line: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cosine distance undefined for a zero-norm vector")]
    ZeroNorm,

    #[error("degenerate combination: combined query vector has zero norm")]
    DegenerateCombination,

    #[error("at least one query vector is required")]
    EmptyQuery,

    #[error("no candidates of requested type")]
    NoCandidates,

    #[error("at least one vocabulary is required")]
    NoVocabularies,

    #[error("no queries to evaluate")]
    NoQueries,

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}
