use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("population mean of {variable} is zero; coefficient of variation undefined")]
    ZeroMean { variable: &'static str },

    #[error("population variance of {variable} is zero")]
    DegenerateVariance { variable: &'static str },

    #[error("population needs at least 2 units, got {0}")]
    PopulationTooSmall(usize),

    #[error("y and x have different lengths ({y} vs {x})")]
    LengthMismatch { y: usize, x: usize },

    #[error("non-finite value at unit {0}")]
    NonFinite(usize),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid design: need 1 <= n < N, got n={n}, N={population}")]
    InvalidDesign { n: usize, population: usize },

    #[error("singular denominator ({0:e})")]
    SingularDenominator(f64),

    #[error("optimal parameters are complex for c={0} (0 < c < 1/2)")]
    NonRealParameters(f64),

    #[error("optimal parameters have a pole at c = 1/2")]
    PoleAtHalf,

    #[error("denominator MSE is zero")]
    DegenerateMse,

    #[error("confidence must lie in (0, 1), got {0}")]
    OutOfRange(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{subsets} subsets exceed the enumeration limit of {limit}")]
    TooLarge { subsets: u128, limit: u128 },

    #[error("empty input")]
    Empty,

    #[error("infeasible moment targets: {0}")]
    InfeasibleTargets(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
