use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed MDP spec: {0}")]
    MalformedSpec(String),

    #[error("stochasticity violation: {what} sums to {sum} (tolerance {tol})")]
    StochasticityViolation { what: String, sum: f64, tol: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergent {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("problem too large: {what} = {size} exceeds cap {cap}")]
    TooLarge { what: String, size: u128, cap: u128 },

    #[error("complement distribution of skill {skill} has a negative entry {value:e}")]
    DegenerateComplement { skill: usize, value: f64 },

    #[error("skill {0} carries the full weight")]
    DegenerateWeight(usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("every polytope vertex is already covered by a learned skill")]
    AllDiscovered,

    #[error("skill set is not a MISL solution: {0}")]
    NotMislSolution(String),

    #[error("too few samples: {what} has {have}, need more than {need}")]
    TooFewSamples {
        what: String,
        have: usize,
        need: usize,
    },

    #[error("linear program failed: {0}")]
    Lp(#[from] crate::lp::LpError),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
