use thiserror::Error;

/// Errors raised by constructors and operations across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus {modulus:#x} is reducible over F2")]
    ReducibleModulus { modulus: u128 },
    #[error("modulus degree {degree} does not match field width {width}")]
    DegreeMismatch { width: u32, degree: u32 },
    #[error("field elements belong to different fields")]
    SpecMismatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("arity {arity} exceeds the limit {limit}")]
    ArityTooLarge { arity: usize, limit: usize },
    #[error("monomial variable {0} is not covered by any block")]
    UncoveredVariable(usize),
    #[error("junta support of size {size} exceeds the limit {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("requested output length {requested} exceeds the maximum {max}")]
    OutputTooLong { requested: usize, max: usize },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("infeasible construction: {0}")]
    Infeasible(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("distributions have different supports ({0} vs {1} outcomes)")]
    SupportMismatch(usize, usize),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
