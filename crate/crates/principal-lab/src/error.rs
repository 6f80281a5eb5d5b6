use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An index or value outside the game's declared spaces.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violating its documented range.
    #[error("invalid parameter `{field}`: {reason}")]
    Param { field: String, reason: String },

    /// A configuration document that parsed but failed validation.
    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A failure inside the protocol loop, tagged with the 1-based round.
    #[error("round {round}: {source}")]
    Round { round: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Param {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn at_round(self, round: usize) -> Self {
        match self {
            Error::Round { .. } => self,
            other => Error::Round {
                round,
                source: Box::new(other),
            },
        }
    }

    /// True for errors that come from the user's configuration rather than the run.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
