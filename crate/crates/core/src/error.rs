use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Run parameters are inconsistent (prime bound, quorum bound, dishonesty bound).
    #[error("configuration error: {0}")]
    Config(String),

    /// Error correction could not recover a polynomial within the decoding radius.
    #[error("decoding failure: {0}")]
    DecodingFailure(String),

    /// A robust opening failed inside a gate; the run cannot continue.
    #[error("abort at {context}: {reason}")]
    Abort { context: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn decoding(msg: impl Into<String>) -> Self {
        Error::DecodingFailure(msg.into())
    }
}
