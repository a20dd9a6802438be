use alloc::string::String;

/// Errors produced by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The induced Markov chain has more than one stationary distribution.
    #[error("stationary distribution is not unique: {0}")]
    NonUniqueStationary(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    /// Exact enumeration would touch more atoms than allowed.
    #[error("joint opponent space has {atoms} atoms (limit {limit}); use the Monte Carlo estimator")]
    TooManyAtoms { atoms: u128, limit: u128 },

    #[error("occupation polytope has {variables} variables (limit {limit})")]
    DimensionCapExceeded { variables: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
