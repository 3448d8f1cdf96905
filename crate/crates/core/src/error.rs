use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Shape, variable-list or schema mismatch.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// An operation's input contract does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A certification step (generation, injectivity, isolatedness, ...) failed.
    #[error("certification failed: {0}")]
    Certification(String),

    #[error("linear algebra: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Structural(msg.into()))
}
