use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A combinatorial or size guard was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The measure does not satisfy a model precondition (dust-freeness, total mass, ...).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The operation is not available for this kind of measure.
    #[error("unsupported measure: {0}")]
    Unsupported(String),

    /// A matrix failed a metric validation.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A configuration or data file is malformed; `field` names the offending entry.
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
