//! Benchmark instances.

use revchain_core::experiments::{gen_random_chain, BenchmarkConfig};
use revchain_core::qp::{build_reduced_qp, ReducedQP};
use revchain_core::{
    stationary_distribution, symmetrized_pattern, ProbabilityVector, SparseStochasticMatrix, StationarySolveOptions,
};

/// Random sparse chain with exactly the requested number of drawn states
/// (before restriction to the largest strongly connected component).
pub fn random_chain(n: usize, seed: u64) -> SparseStochasticMatrix {
    let cfg = BenchmarkConfig {
        num_cases: 1,
        n_min: n,
        n_max: n,
        alpha: 5.0,
        seed,
    };
    gen_random_chain(&cfg, 0).expect("benchmark instance")
}

pub fn stationary(p: &SparseStochasticMatrix) -> ProbabilityVector {
    stationary_distribution(p, &StationarySolveOptions::default()).expect("stationary distribution")
}

/// Reduced QP of `p` on its symmetrized pattern.
pub fn reduced_qp(p: &SparseStochasticMatrix, pi: &ProbabilityVector) -> ReducedQP {
    build_reduced_qp(p, pi, &symmetrized_pattern(p)).expect("reduced QP")
}
