use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },
    #[error("expected a {expected} field, got {found}")]
    Domain { expected: &'static str, found: &'static str },
    #[error("unresolvable on this grid: {0}")]
    Unresolvable(String),
    #[error("singular symbol value at a lattice point: {0}")]
    Singular(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("container: {0}")]
    Container(String),
    #[error("config: {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

pub(crate) fn out_of_range<T>(what: &'static str, value: impl ToString) -> Result<T> {
    Err(Error::OutOfRange { what, value: value.to_string() })
}
