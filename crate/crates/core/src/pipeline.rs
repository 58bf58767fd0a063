//! End-to-end computation of the nearest sparse reversible chain: stationary
//! distribution, ergodic decomposition, one reduced QP per closed class, and
//! reassembly with transient rows copied from the input.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ergodic_decomposition, stationary_distribution, StationarySolveOptions};
use crate::error::{ClassFailure, Error, Result};
use crate::qp::{build_reduced_qp, solve_qp, unscale_solution, KktResiduals, SolverOptions};
use crate::reversibilize::{reversibilize, AcceptanceRule};
use crate::sparse::{
    detailed_balance_residual, stationarity_residual, stochasticity_residual, symmetrized_pattern,
    ProbabilityVector, SparseMatrix, SparseStochasticMatrix, SparsityPattern,
};

/// Classes are solved in parallel above this many unknowns in total.
pub const PARALLEL_THRESHOLD: usize = 10_000;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Stationary distribution to preserve; computed from `P` when absent.
    pub pi: Option<ProbabilityVector>,
    /// Symmetric pattern with full diagonal over all states; restricted to
    /// each class. Defaults to the symmetrized support of each class block.
    pub pattern: Option<SparsityPattern>,
    /// Split `supp(pi)` into closed classes. When off, the whole support is
    /// solved as a single block.
    pub recurse_ergodic: bool,
    pub solver: SolverOptions,
    pub stationary: StationarySolveOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            pi: None,
            pattern: None,
            recurse_ergodic: true,
            solver: SolverOptions::default(),
            stationary: StationarySolveOptions::default(),
        }
    }
}

/// `(||R 1 - 1||, ||D R - R^T D||, ||pi^T R - pi^T||)`, all infinity norms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ResidualTriple {
    pub stochasticity: f64,
    pub detailed_balance: f64,
    pub stationarity: f64,
}

impl ResidualTriple {
    pub fn max(&self) -> f64 {
        self.stochasticity.max(self.detailed_balance).max(self.stationarity)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassDiagnostics {
    pub states: Vec<usize>,
    pub y_m: usize,
    /// Frobenius norm of `R - P` over the rows of this class.
    pub distance: f64,
    pub mh_distance: f64,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residuals: KktResiduals,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub stationary_seconds: f64,
    pub decomposition_seconds: f64,
    pub solve_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineDiagnostics {
    pub schema_version: u32,
    pub n: usize,
    pub num_classes: usize,
    pub transient: Vec<usize>,
    /// Stationary mass of each class.
    pub mixture: Vec<f64>,
    pub per_class: Vec<ClassDiagnostics>,
    pub nnz_p: usize,
    pub nnz_r: usize,
    /// Number of stored entries of `R - P`.
    pub delta_nnz: usize,
    pub delta_frobenius: f64,
    pub mh_baseline_distance: f64,
    pub residuals: ResidualTriple,
    pub timings: Timings,
}

impl PipelineDiagnostics {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Residuals of `R` against `pi`.
pub fn verify(r: &SparseMatrix, pi: &[f64]) -> Result<ResidualTriple> {
    Ok(ResidualTriple {
        stochasticity: stochasticity_residual(r),
        detailed_balance: detailed_balance_residual(r, pi)?,
        stationarity: stationarity_residual(r, pi)?,
    })
}

struct ClassSolution {
    r: SparseMatrix,
    mh: SparseMatrix,
    y_m: usize,
    objective: f64,
    iterations: usize,
    kkt: KktResiduals,
    time: Duration,
}

/// `block` with any missing row mass moved to the diagonal.
fn lazy_completion(block: &SparseMatrix) -> Result<SparseStochasticMatrix> {
    let deficits = block.row_sums().into_iter().enumerate().map(|(i, s)| (i, i, (1.0 - s).max(0.0)));
    let completed = SparseMatrix::from_triplets(
        block.nrows(),
        block.ncols(),
        block.iter().chain(deficits),
    )?;
    SparseStochasticMatrix::new(completed)
}

fn solve_class(
    block: &SparseMatrix,
    pi: &ProbabilityVector,
    pattern: &SparsityPattern,
    solver: &SolverOptions,
) -> Result<ClassSolution> {
    let timer = Instant::now();
    let qp = build_reduced_qp(block, pi, pattern)?;
    let solution = solve_qp(&qp, solver)?;
    let r = unscale_solution(&solution.y, qp.maps(), qp.pi_hat())?.into_inner();
    let mh = reversibilize(&lazy_completion(block)?, pi, AcceptanceRule::MetropolisHastings)?.into_inner();
    Ok(ClassSolution {
        r,
        mh,
        y_m: qp.y_m(),
        objective: solution.objective,
        iterations: solution.iterations,
        kkt: solution.kkt_residuals,
        time: timer.elapsed(),
    })
}

/// Squared Frobenius distance of each row.
fn row_distances_sq(a: &SparseMatrix, b: &SparseMatrix) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| {
            let (ca, va) = a.row(i);
            let (cb, vb) = b.row(i);
            let (mut p, mut q, mut acc) = (0, 0, 0.0);
            while p < ca.len() || q < cb.len() {
                let d = match (ca.get(p), cb.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        va[p - 1] - vb[q - 1]
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        va[p - 1]
                    }
                    (Some(_), None) => {
                        p += 1;
                        va[p - 1]
                    }
                    _ => {
                        q += 1;
                        -vb[q - 1]
                    }
                };
                acc += d * d;
            }
            acc
        })
        .collect()
}

fn scatter(
    n: usize,
    classes: &[Vec<usize>],
    blocks: &[&SparseMatrix],
    p: &SparseMatrix,
    copied_rows: &[usize],
) -> Result<SparseMatrix> {
    let mut triplets = Vec::new();
    for (states, block) in classes.iter().zip(blocks) {
        triplets.extend(block.iter().map(|(i, j, v)| (states[i], states[j], v)));
    }
    for &i in copied_rows {
        let (cols, vals) = p.row(i);
        triplets.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// Nearest reversible chain to `p` with the same stationary distribution on
/// each closed class and support inside the class pattern.
///
/// Rows of states outside `supp(pi)` are copied from `p`. Failures of
/// individual classes are collected into [`Error::ClassSolveFailed`] after
/// all classes have been attempted.
pub fn nearest_sparse_reversible(
    p: &SparseStochasticMatrix,
    options: &PipelineOptions,
) -> Result<(SparseStochasticMatrix, PipelineDiagnostics)> {
    let total_timer = Instant::now();
    let n = p.n();

    let timer = Instant::now();
    let pi = match &options.pi {
        Some(pi) if pi.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: pi.len(),
            })
        }
        Some(pi) => pi.clone(),
        None => stationary_distribution(p, &options.stationary)?,
    };
    let stationary_seconds = timer.elapsed().as_secs_f64();
    if let Some(pattern) = &options.pattern {
        if pattern.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: pattern.n(),
            });
        }
        pattern.require_symmetric_with_diagonal()?;
    }

    let timer = Instant::now();
    let (classes, transient, mixture) = if options.recurse_ergodic {
        let decomposition = ergodic_decomposition(p, &pi)?;
        (decomposition.classes, decomposition.transient, decomposition.mixture)
    } else {
        let support = pi.support();
        let transient = (0..n).filter(|i| pi[*i] <= pi.zero_threshold()).collect();
        let mass = support.iter().map(|&i| pi[i]).sum();
        (vec![support], transient, vec![mass])
    };
    let decomposition_seconds = timer.elapsed().as_secs_f64();

    let timer = Instant::now();
    let mut prepared = Vec::with_capacity(classes.len());
    for states in &classes {
        let block = p.principal_submatrix(states);
        let pattern = match &options.pattern {
            Some(pattern) => pattern.restrict(states),
            None => symmetrized_pattern(&block),
        };
        prepared.push((block, pi.restrict(states)?, pattern));
    }
    let total_unknowns: usize = prepared
        .iter()
        .map(|(_, _, m)| (m.nnz() - m.n()) / 2 + m.n())
        .sum();
    let run = |(block, pi_c, pattern): &(SparseMatrix, ProbabilityVector, SparsityPattern)| {
        solve_class(block, pi_c, pattern, &options.solver)
    };
    let outcomes: Vec<Result<ClassSolution>> = if prepared.len() > 1 && total_unknowns > PARALLEL_THRESHOLD {
        prepared.par_iter().map(run).collect()
    } else {
        prepared.iter().map(run).collect()
    };
    let solve_seconds = timer.elapsed().as_secs_f64();

    let mut solutions = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (class, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(solution) => solutions.push(solution),
            Err(cause) => failures.push(ClassFailure {
                class,
                states: classes[class].clone(),
                cause,
            }),
        }
    }
    if !failures.is_empty() {
        return Err(Error::ClassSolveFailed(failures));
    }

    let r_blocks: Vec<&SparseMatrix> = solutions.iter().map(|s| &s.r).collect();
    let r = SparseStochasticMatrix::new(scatter(n, &classes, &r_blocks, p, &transient)?)?;
    let mh_blocks: Vec<&SparseMatrix> = solutions.iter().map(|s| &s.mh).collect();
    let mh = scatter(n, &classes, &mh_blocks, p, &transient)?;

    let r_rows = row_distances_sq(&r, p);
    let mh_rows = row_distances_sq(&mh, p);
    let per_class: Vec<ClassDiagnostics> = classes
        .iter()
        .zip(&solutions)
        .map(|(states, s)| ClassDiagnostics {
            states: states.clone(),
            y_m: s.y_m,
            distance: states.iter().map(|&i| r_rows[i]).sum::<f64>().sqrt(),
            mh_distance: states.iter().map(|&i| mh_rows[i]).sum::<f64>().sqrt(),
            objective: s.objective,
            iterations: s.iterations,
            kkt_residuals: s.kkt,
            solve_seconds: s.time.as_secs_f64(),
        })
        .collect();

    let delta = r.sub(p)?;
    let diagnostics = PipelineDiagnostics {
        schema_version: PipelineDiagnostics::SCHEMA_VERSION,
        n,
        num_classes: classes.len(),
        transient,
        mixture,
        per_class,
        nnz_p: p.nnz(),
        nnz_r: r.nnz(),
        delta_nnz: delta.nnz(),
        delta_frobenius: r_rows.iter().sum::<f64>().sqrt(),
        mh_baseline_distance: mh_rows.iter().sum::<f64>().sqrt(),
        residuals: verify(&r, &pi)?,
        timings: Timings {
            stationary_seconds,
            decomposition_seconds,
            solve_seconds,
            total_seconds: total_timer.elapsed().as_secs_f64(),
        },
    };
    Ok((r, diagnostics))
}
