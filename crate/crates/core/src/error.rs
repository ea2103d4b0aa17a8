use thiserror::Error;

/// Errors raised by the estimation pipeline and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability level must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("sample must contain at least one observation")]
    EmptySample,

    #[error("observation {index} is not finite ({value})")]
    NonFiniteValue { index: usize, value: f64 },

    /// Ranks are one-based, as in `x_(1) <= ... <= x_(n)`.
    #[error("rank {rank} is outside 1..={n}")]
    RankOutOfRange { rank: usize, n: usize },

    #[error("insufficient samples: need n >= {required} for p = {p}, got n = {n}")]
    InsufficientSamples { n: usize, p: f64, required: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("input sequence is empty")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
