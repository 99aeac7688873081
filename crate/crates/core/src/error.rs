use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A simulation or stream parameter is out of range.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An analytic or statistical quantity is undefined for the input.
    #[error("domain error: {0}")]
    Domain(String),
    /// An API contract was violated by the caller.
    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
