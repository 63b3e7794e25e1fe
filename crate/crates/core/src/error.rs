use thiserror::Error;

/// Errors raised by the simulation and learning routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate direction: source and target points coincide")]
    DegenerateDirection,

    #[error("degenerate channel: all gains are zero")]
    DegenerateChannel,

    #[error("degenerate weights: beam has zero response at the steering direction")]
    DegenerateWeights,

    #[error("undefined correlation: series has zero variance")]
    UndefinedCorrelation,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid action {action}: action space has {count} actions")]
    InvalidAction { action: usize, count: usize },

    #[error("zero distance between transmitter and receiver")]
    ZeroDistance,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
