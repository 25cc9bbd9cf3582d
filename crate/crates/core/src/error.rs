use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid temperature ladder: {0}")]
    InvalidLadder(String),

    #[error("ensemble needs at least 2 walkers, got {0}")]
    TooFewWalkers(usize),

    #[error("walker count mismatch between ensembles: {0} vs {1}")]
    WalkerCountMismatch(usize, usize),

    #[error("no swap attempts recorded for pair {0} in this window")]
    EmptySwapWindow(usize),

    #[error("empty history ring")]
    EmptyHistory,

    #[error("no cold-chain swap attempts in this window")]
    NoColdAttempts,

    #[error("series `{label}` has zero variance")]
    ZeroVariance { label: String },

    #[error("series `{label}` too short: {reason}")]
    SeriesTooShort { label: String, reason: String },

    #[error("non-finite reward {0}")]
    NonFiniteReward(f64),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
