//! Reduced quadratic program: assembly, solvers and an exhaustive oracle.

mod build;
mod ipm;
mod linalg;
mod oracle;
mod projection;

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use build::{
    apply_reduced_operator, build_index_maps, build_reduced_qp, expand_symmetric,
    unscale_solution, IndexMaps, QpDump, ReducedQP, NEGATIVE_TOLERANCE,
};
pub use oracle::{oracle_solve, ORACLE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SolverVariant {
    /// Primal-dual predictor-corrector with an active-set polish.
    #[default]
    InteriorPoint,
    /// Gradient projection in the Hessian metric; each projection onto
    /// `{A y = b, y >= 0}` is solved by a semismooth Newton method on its dual.
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
    pub variant: SolverVariant,
    /// Starting point; defaults to the Metropolis-Hastings feasible point.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kkt_tolerance: 1e-10,
            max_iterations: 200,
            variant: SolverVariant::InteriorPoint,
            warm_start: None,
        }
    }
}

/// Infinity-norm KKT residuals. Stationarity is relative to
/// `1 + max(||Q y||, ||c||)`; the others are absolute.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal_eq: f64,
    pub primal_ineq: f64,
    pub dual_ineq: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        [
            self.stationarity,
            self.primal_eq,
            self.primal_ineq,
            self.dual_ineq,
            self.complementarity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.max() <= tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub y: Vec<f64>,
    /// Multipliers of `A y = b`.
    pub lambda: Vec<f64>,
    /// Multipliers of `y >= 0`.
    pub z: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residuals: KktResiduals,
    pub wall_time: Duration,
    pub variant: SolverVariant,
}

pub fn kkt_residuals(qp: &ReducedQP, y: &[f64], lambda: &[f64], z: &[f64]) -> KktResiduals {
    let q = qp.hessian_diagonal();
    let c = qp.linear();
    let at_lambda = qp.at_mul(lambda);
    let mut stationarity = 0.0f64;
    let mut scale = 0.0f64;
    let mut complementarity = 0.0f64;
    for k in 0..y.len() {
        let qy = q[k] * y[k];
        scale = scale.max(qy.abs()).max(c[k].abs());
        stationarity = stationarity.max((qy + c[k] - at_lambda[k] - z[k]).abs());
        complementarity = complementarity.max((y[k] * z[k]).abs());
    }
    let min_y = y.iter().copied().fold(f64::INFINITY, f64::min);
    let min_z = z.iter().copied().fold(f64::INFINITY, f64::min);
    KktResiduals {
        stationarity: stationarity / (1.0 + scale),
        primal_eq: inf_norm(&qp.equality_residual(y)),
        primal_ineq: (-min_y).max(0.0),
        dual_ineq: (-min_z).max(0.0),
        complementarity,
    }
}

/// Solves the reduced QP.
///
/// Fails with [`Error::MaxIterations`] carrying the last iterate when the
/// KKT tolerance is not met.
pub fn solve_qp(qp: &ReducedQP, options: &SolverOptions) -> Result<SolverResult> {
    let start = match &options.warm_start {
        Some(y) if y.len() != qp.y_m() => {
            return Err(Error::LengthMismatch {
                expected: qp.y_m(),
                found: y.len(),
            })
        }
        Some(y) => y.clone(),
        None => qp.feasible_point().to_vec(),
    };
    let timer = Instant::now();
    let outcome = match options.variant {
        SolverVariant::InteriorPoint => ipm::interior_point(qp, options, start),
        SolverVariant::ProjectedGradient => {
            projection::projected_gradient(qp, options, start, qp.hessian_diagonal())
        }
    }?;
    let result = SolverResult {
        objective: qp.objective(&outcome.y),
        kkt_residuals: kkt_residuals(qp, &outcome.y, &outcome.lambda, &outcome.z),
        y: outcome.y,
        lambda: outcome.lambda,
        z: outcome.z,
        iterations: outcome.iterations,
        wall_time: timer.elapsed(),
        variant: options.variant,
    };
    log::debug!(
        "{:?}: {} iterations, objective {:.6e}, kkt {:.2e}",
        result.variant,
        result.iterations,
        result.objective,
        result.kkt_residuals.max()
    );
    if result.kkt_residuals.within(options.kkt_tolerance) {
        Ok(result)
    } else {
        Err(Error::MaxIterations(Box::new(result)))
    }
}

/// Raw solver output before residuals are evaluated.
struct Iterate {
    y: Vec<f64>,
    lambda: Vec<f64>,
    z: Vec<f64>,
    iterations: usize,
}

/// Multipliers for a primal point: `lambda` solves the Hessian-weighted
/// least-squares stationarity system on `{k : y_k > 0}`, and `z` is the
/// clipped reduced gradient on the rest.
fn recover_multipliers(qp: &ReducedQP, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let q = qp.hessian_diagonal();
    let c = qp.linear();
    let free: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
    let mut chol = linalg::EnvelopeCholesky::new(&qp.maps().adjacency());
    let weights: Vec<f64> = free.iter().zip(q).map(|(&f, &q)| if f { 1.0 / q } else { 0.0 }).collect();
    ipm::assemble_normal(&mut chol, qp, &weights);
    chol.factor(ipm::SINGULAR_PIVOT);
    // A_F Q_F^{-1} (Q y + c)_F
    let g: Vec<f64> = (0..y.len())
        .map(|k| weights[k] * (q[k] * y[k] + c[k]))
        .collect();
    let lambda = chol.solve(&qp.a_mul(&g));
    let at_lambda = qp.at_mul(&lambda);
    let z = (0..y.len())
        .map(|k| {
            if free[k] {
                0.0
            } else {
                (q[k] * y[k] + c[k] - at_lambda[k]).max(0.0)
            }
        })
        .collect();
    (lambda, z)
}

/// Residuals and objective for a point produced elsewhere, e.g. by an
/// external solver fed with [`write_qp_dump`].
pub fn evaluate_solution(qp: &ReducedQP, y: &[f64]) -> Result<SolverResult> {
    if y.len() != qp.y_m() {
        return Err(Error::LengthMismatch {
            expected: qp.y_m(),
            found: y.len(),
        });
    }
    let (lambda, z) = recover_multipliers(qp, y);
    Ok(SolverResult {
        objective: qp.objective(y),
        kkt_residuals: kkt_residuals(qp, y, &lambda, &z),
        y: y.to_vec(),
        lambda,
        z,
        iterations: 0,
        wall_time: Duration::ZERO,
        variant: SolverVariant::default(),
    })
}

pub fn write_qp_dump(qp: &ReducedQP, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(file, &qp.to_dump())?;
    Ok(())
}

/// Reads a solution vector stored as a JSON array.
pub fn read_solution(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
