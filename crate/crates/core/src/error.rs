use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The requested quantity does not exist for these parameters
    /// (e.g. a massless Green function in d ≤ 2).
    #[error("domain error: {0}")]
    Domain(String),
    /// A series or quadrature failed to reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// A linear system was singular.
    #[error("singular matrix")]
    Singular,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
