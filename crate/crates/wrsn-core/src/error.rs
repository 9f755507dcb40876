use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Instance or parameter violates a documented invariant.
    Validation(String),
    /// File could not be parsed; carries 1-based line number and context.
    Parse { line: usize, msg: String },
    /// A requested solution or deployment does not exist.
    Infeasible(String),
    /// A solver exceeded its configured memory budget.
    MemoryCap(String),
    /// Training diverged (non-finite loss or parameters).
    Diverged(String),
    /// I/O failure, stringified to keep the type cloneable.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::MemoryCap(msg) => write!(f, "memory cap exceeded: {msg}"),
            Error::Diverged(msg) => write!(f, "training diverged: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
