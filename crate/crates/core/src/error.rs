use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} exceeds the supported limit ({got} > {limit})")]
    Capacity {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training failed at iteration {iteration}: {reason}")]
    TrainingFailure { iteration: usize, reason: String },

    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Innermost error beneath any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
