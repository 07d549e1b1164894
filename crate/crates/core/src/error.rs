use thiserror::Error;

/// Errors raised anywhere in the simulation and modelling pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("channel estimate is zero; combiner is undefined")]
    DegenerateCombiner,

    #[error("observation equals the known mean; posterior is degenerate")]
    DegenerateObservation,

    #[error("degenerate sample statistics: {0}")]
    DegenerateStatistics(String),

    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),

    #[error("cannot fit inverse-gamma model: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad user-supplied configuration rather than
    /// by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
