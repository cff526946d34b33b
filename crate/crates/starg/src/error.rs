use thiserror::Error;

/// Errors surfaced by the starg library.
///
/// `Contract` covers violated preconditions (bad shapes, mismatched groups,
/// out-of-range arguments, malformed configs); `Numerical` covers operations
/// that were called correctly but failed numerically (singular solves,
/// non-convergent iterations, residuals above their bound). Parse errors
/// carry the 1-based line number of the offending input line.
#[derive(Error, Debug)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
