use std::fmt;

use crate::qp::SolverResult;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("row {0} has no positive entry")]
    ZeroRow(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("stationary iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("state {state} in the support of pi leaks {mass:e} probability outside the support")]
    InconsistentSupport { state: usize, mass: f64 },

    #[error("pi is not positive at state {0}")]
    NonPositivePi(usize),

    #[error("sparsity pattern is not symmetric: ({0}, {1}) present without its transpose")]
    PatternNotSymmetric(usize, usize),

    #[error("sparsity pattern is missing diagonal entry {0}")]
    MissingDiagonal(usize),

    #[error("vector length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("reduced variable {index} is negative ({value:e})")]
    NegativeEntry { index: usize, value: f64 },

    #[error("solver stopped after {} iterations without meeting the KKT tolerance", .0.iterations)]
    MaxIterations(Box<SolverResult>),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("problem too large for exhaustive enumeration: {0} variables")]
    TooLarge(usize),

    #[error("no feasible point found")]
    Infeasible,

    #[error("{} ergodic class solve(s) failed: {}", .0.len(), ClassFailures(.0))]
    ClassSolveFailed(Vec<ClassFailure>),

    #[error("degenerate random instance: {0}")]
    DegenerateInstance(String),

    #[error("trajectory has no transitions")]
    EmptyTrajectory,

    #[error("bin {bin} out of range for {bins} bins")]
    BinOutOfRange { bin: usize, bins: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A failed per-class solve inside the pipeline.
#[derive(Debug)]
pub struct ClassFailure {
    pub class: usize,
    pub states: Vec<usize>,
    pub cause: Error,
}

struct ClassFailures<'a>(&'a [ClassFailure]);

impl fmt::Display for ClassFailures<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, failure) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "class {}: {}", failure.class, failure.cause)?;
        }
        Ok(())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
