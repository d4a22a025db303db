use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {kind} `{token}`: {reason}")]
    InvalidToken {
        kind: &'static str,
        token: String,
        reason: &'static str,
    },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("relation `{relation}` expects {expected} values per row, found {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("value `{value}` is not allowed: {reason}")]
    ForbiddenValue { value: String, reason: &'static str },
    #[error("functional dependency {fd} is violated in {location}")]
    FdViolation { fd: String, location: String },
    #[error("{what} would produce {rows} rows, above the row limit {limit}")]
    RowLimit { what: String, rows: String, limit: u64 },
    #[error("{what} has size {size}, above the cap {cap}")]
    CapExceeded { what: String, size: usize, cap: usize },
    #[error("invalid construction input: {0}")]
    InvalidConstruction(String),
    #[error("{0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("linear program: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
