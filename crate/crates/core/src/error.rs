use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// The selection loop hit its draw budget before enough replicates were
    /// accepted. Carries the partial counts so callers can report them.
    #[error("incomplete run: accepted {accepted} of {requested} replicates after {attempts} draws")]
    IncompleteRun {
        accepted: u64,
        requested: u64,
        attempts: u64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
