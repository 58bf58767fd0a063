//! Desk-scale experiment drivers: random benchmark chains and Langevin
//! count matrices.

mod benchmark;
mod langevin;

pub use benchmark::{
    case_rng, gen_random_chain, gen_random_chain_attempt, run_benchmark, BenchmarkConfig,
    BenchmarkRecord, BenchmarkReport, ATTEMPTS_PER_CASE,
};
pub use langevin::{
    count_matrix, estimate_transition_matrix, langevin_trajectory, LangevinBins, LangevinConfig,
    Potential,
};
