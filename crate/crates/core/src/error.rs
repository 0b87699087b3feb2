use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A caller broke an operator precondition (e.g. hopping onto an occupied site).
    #[error("logic error: {0}")]
    Logic(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
