//! Random sparse benchmark chains and the batch benchmark driver.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::strongly_connected_components;
use crate::error::{Error, Result};
use crate::pipeline::{nearest_sparse_reversible, PipelineOptions, ResidualTriple};
use crate::sparse::{row_normalize, SparseMatrix, SparseStochasticMatrix};

/// Substreams reserved per case for regenerating degenerate draws.
pub const ATTEMPTS_PER_CASE: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub num_cases: usize,
    pub n_min: usize,
    pub n_max: usize,
    /// Number of drawn entries per state.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            num_cases: 100,
            n_min: 100,
            n_max: 300,
            alpha: 5.0,
            seed: 0,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 2 || self.n_min > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "need 2 <= n_min <= n_max, got n_min = {}, n_max = {}",
                self.n_min, self.n_max
            )));
        }
        if self.alpha < 1.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// RNG for one draw: ChaCha8 keyed by the seed, on stream
/// `case_index * ATTEMPTS_PER_CASE + attempt`.
pub fn case_rng(seed: u64, case_index: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case_index * ATTEMPTS_PER_CASE + attempt);
    rng
}

/// One draw; fails with [`Error::DegenerateInstance`] if the largest strongly
/// connected component has fewer than two states.
pub fn gen_random_chain_attempt(
    cfg: &BenchmarkConfig,
    case_index: u64,
    attempt: u64,
) -> Result<SparseStochasticMatrix> {
    cfg.validate()?;
    let mut rng = case_rng(cfg.seed, case_index, attempt);
    let n = rng.random_range(cfg.n_min..=cfg.n_max);
    let draws = (cfg.alpha * n as f64).floor() as usize;
    let mut seen = HashSet::with_capacity(draws);
    let mut triplets = Vec::with_capacity(draws);
    for _ in 0..draws {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let value = loop {
            let v: f64 = rng.random();
            if v > 0.0 {
                break v;
            }
        };
        if seen.insert((i, j)) {
            triplets.push((i, j, value));
        }
    }
    let m = SparseMatrix::from_triplets(n, n, triplets)?;
    let largest = strongly_connected_components(&m)
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .unwrap_or_default();
    if largest.len() < 2 {
        return Err(Error::DegenerateInstance(format!(
            "largest strongly connected component has {} state(s)",
            largest.len()
        )));
    }
    row_normalize(&m.principal_submatrix(&largest))
}

/// Random irreducible chain for `case_index`, a pure function of the seed
/// and the index.
pub fn gen_random_chain(cfg: &BenchmarkConfig, case_index: u64) -> Result<SparseStochasticMatrix> {
    let mut last = None;
    for attempt in 0..ATTEMPTS_PER_CASE {
        match gen_random_chain_attempt(cfg, case_index, attempt) {
            Err(e @ Error::DegenerateInstance(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRecord {
    pub case: usize,
    pub n: usize,
    pub nnz_p: usize,
    pub nnz_r: usize,
    pub delta_frobenius: f64,
    pub mh_distance: f64,
    pub residuals: ResidualTriple,
    pub solve_seconds: f64,
    /// Set when the case failed; the numeric fields are then NaN or zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub records: Vec<BenchmarkRecord>,
    pub total_seconds: f64,
}

impl BenchmarkReport {
    pub fn failures(&self) -> impl Iterator<Item = &BenchmarkRecord> {
        self.records.iter().filter(|r| r.error.is_some())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        writeln!(
            w,
            "case,n,nnz_p,nnz_r,delta_frobenius,mh_distance,stochasticity,detailed_balance,stationarity,solve_seconds,error"
        )?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:.6},{}",
                r.case,
                r.n,
                r.nnz_p,
                r.nnz_r,
                r.delta_frobenius,
                r.mh_distance,
                r.residuals.stochasticity,
                r.residuals.detailed_balance,
                r.residuals.stationarity,
                r.solve_seconds,
                r.error.as_deref().unwrap_or("").replace([',', '\n'], " ")
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn run_case(cfg: &BenchmarkConfig, case: usize, options: &PipelineOptions) -> BenchmarkRecord {
    let failed = |n, nnz_p, error: Error| BenchmarkRecord {
        case,
        n,
        nnz_p,
        nnz_r: 0,
        delta_frobenius: f64::NAN,
        mh_distance: f64::NAN,
        residuals: ResidualTriple {
            stochasticity: f64::NAN,
            detailed_balance: f64::NAN,
            stationarity: f64::NAN,
        },
        solve_seconds: f64::NAN,
        error: Some(error.to_string()),
    };
    let p = match gen_random_chain(cfg, case as u64) {
        Ok(p) => p,
        Err(e) => return failed(0, 0, e),
    };
    match nearest_sparse_reversible(&p, options) {
        Ok((r, diag)) => BenchmarkRecord {
            case,
            n: p.n(),
            nnz_p: p.nnz(),
            nnz_r: r.nnz(),
            delta_frobenius: diag.delta_frobenius,
            mh_distance: diag.mh_baseline_distance,
            residuals: diag.residuals,
            solve_seconds: diag.timings.total_seconds,
            error: None,
        },
        Err(e) => failed(p.n(), p.nnz(), e),
    }
}

/// Runs all cases in parallel; failures are recorded per case.
pub fn run_benchmark(cfg: &BenchmarkConfig, options: &PipelineOptions) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let timer = std::time::Instant::now();
    let records = (0..cfg.num_cases)
        .into_par_iter()
        .map(|case| run_case(cfg, case, options))
        .collect();
    Ok(BenchmarkReport {
        config: cfg.clone(),
        records,
        total_seconds: timer.elapsed().as_secs_f64(),
    })
}
