use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied something outside an operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A computed quantity left its physical range (negative probability, non-unit trace, ...).
    #[error("numerical integrity failure: {0}")]
    NumericalIntegrity(String),

    #[error("backend error at cell (state {state}, observable {observable}): {message}")]
    BackendCell {
        state: usize,
        observable: usize,
        message: String,
    },

    #[error("backend error: {0}")]
    Backend(String),

    /// Two fingerprints built from different reference suites.
    #[error("fingerprints are not comparable: {0}")]
    SuiteMismatch(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::NumericalIntegrity(msg.into())
    }
}
