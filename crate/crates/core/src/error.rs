use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid world: {0}")]
    InvalidWorld(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("no trajectory reaches the goal within {max_length} cells")]
    EmptyTrajectorySet { max_length: usize },

    #[error("resource bound exceeded: {0}")]
    ResourceBound(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("trajectory set has no computed features")]
    MissingFeatures,

    #[error("all feature vectors are identical; leave-one-out bandwidth has no finite maximizer")]
    DegenerateFeatures,

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }
}
