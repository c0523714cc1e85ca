use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero vector has no primitive part")]
    ZeroVector,
    #[error("degenerate basis")]
    DegenerateBasis,
    #[error("complement is trivial")]
    TrivialComplement,
    #[error("not coordinate-disjoint")]
    NotCoordinateDisjoint,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("phi undefined: d + e = {0} exceeds n = {1}")]
    PhiUndefined(usize, usize),
    #[error("index {j} out of range 1..={max}")]
    IndexOutOfRange { j: usize, max: usize },
    #[error("precision insufficient: try at least {suggested_bits} bits")]
    Precision { suggested_bits: u32 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("formula out of validity range: {0}")]
    OutOfRange(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("too few records: {0}")]
    TooFewRecords(usize),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
