use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("symbol {symbol} of user {user} is outside the alphabet 0..{alphabet}")]
    SymbolOutOfRange {
        user: usize,
        symbol: usize,
        alphabet: usize,
    },

    #[error("expected {expected} per-user symbols, got {got}")]
    WrongUserCount { expected: usize, got: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("output letter index {index} out of range (channel has {len} letters)")]
    LetterOutOfRange { index: usize, len: usize },

    #[error("letter {0} has zero output probability; purge the channel first")]
    UnpurgedLetter(usize),

    #[error("channel has no output letter with positive probability")]
    DegenerateChannel,

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("user sets overlap at user {0}")]
    OverlappingUserSets(usize),

    #[error("user index {user} out of range for a {users}-user channel")]
    UserOutOfRange { user: usize, users: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("transition matrix row {row} sums to {sum}, not 1")]
    NonStochastic { row: usize, sum: f64 },

    #[error("fidelity parameter mu = {mu} is below the required minimum {min}")]
    MuTooSmall { mu: f64, min: f64 },

    #[error("empty bin")]
    EmptyBin,

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Unsupported(String),
}
