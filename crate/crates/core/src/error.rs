use thiserror::Error;

/// Errors raised by the library. Variants name the violated precondition.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} outside supported range 1..=64")]
    UnsupportedDimension(usize),

    #[error("subspace dimension {dim} exceeds enumeration guard {limit}")]
    EnumerationGuard { dim: usize, limit: usize },

    #[error("table size guard exceeded: n = {n}, limit {limit}")]
    TableGuard { n: usize, limit: usize },

    #[error("matrix is not invertible (rank {rank} < {n})")]
    NotInvertible { rank: usize, n: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid spread: {0}")]
    InvalidSpread(String),

    #[error("invalid partial spread: {0}")]
    InvalidPartialSpread(String),

    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),

    #[error("query budget of {0} exhausted")]
    BudgetExhausted(usize),

    #[error("adversary protocol violation: {0}")]
    Protocol(String),

    #[error("value-mode transcript cannot be scored for collisions")]
    ValueModeTranscript,

    #[error("swap not possible: {0}")]
    SwapPrecondition(String),

    #[error("oracle inconsistency: {0}")]
    OracleInconsistency(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
