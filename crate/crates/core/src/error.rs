use thiserror::Error;

/// Errors raised across the crate. Each variant names the offending input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("{name} = {value} is not a reinforcement parameter in [-1, 1]")]
    InvalidReinforcement { name: &'static str, value: f64 },

    #[error("initial step {name} = {value} must be -1 or +1")]
    InvalidStep { name: &'static str, value: i64 },

    #[error("initial condition x1_first, x1_second = ({first:+}, {second:+}) is excluded when alpha1 = alpha2 = {alpha}")]
    DegenerateInitialCondition { first: i8, second: i8, alpha: f64 },

    #[error("state (n = {n}, s1 = {s1}, s2 = {s2}) violates range or parity")]
    InvalidState { n: u64, s1: i64, s2: i64 },

    #[error("conditional step law is undefined at n = 0")]
    ZeroTime,

    #[error("{name} must be at least {min}, got {value}")]
    TooSmall { name: &'static str, min: u64, value: u64 },

    #[error("{name} = {value} exceeds the cap {cap}")]
    TooLarge { name: &'static str, value: u64, cap: u64 },

    #[error("index k = {k} is outside 1..={n}")]
    IndexOutOfRange { n: u64, k: u64 },

    #[error("walk bank for vertex {vertex} holds {available} steps, {needed} needed")]
    BankTooShort { vertex: usize, available: usize, needed: usize },

    #[error("length mismatch for {name}: expected {expected}, got {actual}")]
    LengthMismatch { name: &'static str, expected: usize, actual: usize },

    #[error("operation requires {required}, but the parameters are in regime {actual}")]
    WrongRegime { required: &'static str, actual: String },

    #[error("degenerate variance {0}")]
    DegenerateVariance(f64),

    #[error("horizon {horizon} must be at least 100 x n_steps = {required}")]
    InsufficientHorizon { horizon: u64, required: u64 },

    #[error("construction requires p2 = 1/2, got p2 = {0}")]
    NotHalfPartner(f64),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
