use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to be
/// reported without the caller re-deriving the offending input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability entry {index} is {value}; every symbol must have strictly positive mass")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, not 1 (tolerance {tolerance:e})")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("alphabet has {size} symbols; at least 2 are required")]
    AlphabetTooSmall { size: usize },

    #[error("alphabet sizes differ: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("hypotheses are identical; the likelihood ratio carries no information")]
    IdenticalHypotheses,

    #[error("priors ({prior1}, {prior2}) must lie in (0,1) and sum to 1")]
    InvalidPriors { prior1: f64, prior2: f64 },

    #[error("increment bound {value} at step {index} must be strictly positive")]
    NonPositiveIncrementBound { index: usize, value: f64 },

    #[error("expected {expected} per-step increment bounds, got {actual}")]
    IncrementCountMismatch { expected: usize, actual: usize },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error(
        "moderate thresholds cross at n = {n}: (eps1 + eps2) * n^-(1-eta) = {margin} exceeds \
         D(P1||P2) + D(P2||P1) = {span}"
    )]
    ThresholdCrossing { n: u64, margin: f64, span: f64 },

    #[error("fixed thresholds (lo = {lo}, hi = {hi}) must satisfy {lower_limit} < lo <= hi < {upper_limit}")]
    FixedThresholdOutOfRange {
        lo: f64,
        hi: f64,
        lower_limit: f64,
        upper_limit: f64,
    },

    #[error("log-probability {0} is positive or NaN")]
    InvalidLogProbability(f64),

    #[error("type enumeration for n = {n}, k = {k} needs {required} classes, budget is {budget}")]
    BudgetExceeded {
        n: u64,
        k: usize,
        required: String,
        budget: u64,
    },

    #[error("tilted distribution at t = {0} is numerically degenerate")]
    DegenerateTilt(f64),

    #[error("threshold {threshold} per symbol lies outside the tilted-mean range [{low}, {high}]")]
    ThresholdOutsideMeanRange { threshold: f64, low: f64, high: f64 },

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
