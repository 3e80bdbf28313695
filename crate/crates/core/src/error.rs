use thiserror::Error;

/// Errors raised by the library.
///
/// Variants mirror the failure modes of the individual operations; the CLI
/// maps them onto its exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("column index {index} out of range for a matrix with {cols} columns")]
    IndexOutOfRange { index: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("malformed matrix: {0}")]
    BadMatrix(String),
    #[error("rank deficit requested for an empty column set")]
    EmptyQ,
    #[error("nonempty column set {0:?} has |Q| = r_Q; the matrix is not positive")]
    DegenerateDenominator(Vec<usize>),
    #[error("{what} too large: {size} exceeds the limit {limit}")]
    TooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("invalid embedding: {0}")]
    BadEmbedding(String),
    #[error("internal rank identity violated: {0}")]
    RankIdentityViolation(String),
    #[error("matrix is not abundant")]
    NotAbundant,
    #[error("matrix is not positive")]
    NotPositive,
    #[error("system is inconsistent over the rationals")]
    Inconsistent,
    #[error("box of {assignments} free assignments exceeds the guard {limit}")]
    BoxTooLarge { assignments: u128, limit: u128 },
    #[error("intermediate value does not fit in 128-bit arithmetic")]
    Overflow,
    #[error("zero count at n = {0}; grid too small for a log-log fit")]
    ZeroCount(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("preconditions not met: {0}")]
    PreconditionFailed(String),
    #[error("count variance is zero; the standardized count is undefined")]
    DegenerateVariance,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
