use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The economic or simulation configuration violates an invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// Both shifted fitnesses vanished in a replicator step.
    #[error("degenerate replicator step: total shifted fitness is {0}")]
    DegenerateStep(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by user-supplied parameters.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Config(_))
    }
}
