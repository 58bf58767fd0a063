//! Nearest reversible Markov chains on a prescribed sparsity pattern.
//!
//! Given a row-stochastic `P` with stationary distribution `pi`, the
//! pipeline finds the Frobenius-nearest chain that is reversible with respect
//! to `pi` and supported on `S(P + P^T + I)`, one closed class at a time.

pub mod chain;
pub mod error;
pub mod experiments;
pub mod mtx;
pub mod pipeline;
pub mod qp;
pub mod reversibilize;
pub mod sparse;

pub use chain::{
    ergodic_decomposition, is_irreducible, kolmogorov_cycle_check, stationary_distribution,
    strongly_connected_components, CycleVerdict, ErgodicDecomposition, StationaryMethod,
    StationarySolveOptions,
};
pub use error::{ClassFailure, Error, Result};
pub use pipeline::{
    nearest_sparse_reversible, verify, PipelineDiagnostics, PipelineOptions, ResidualTriple,
};
pub use qp::{SolverOptions, SolverResult, SolverVariant};
pub use reversibilize::{mh_baseline_distance, proposal_from_pattern, reversibilize, AcceptanceRule};
pub use sparse::{
    frobenius_distance, symmetrized_pattern, ProbabilityVector, SparseMatrix,
    SparseStochasticMatrix, SparsityPattern,
};
