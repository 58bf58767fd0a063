//! Scaled gradient projection.
//!
//! The projection `argmin 1/2 sum_k h_k (y_k - v_k)^2` over `{A y = b, y >= 0}`
//! is computed from its concave dual `psi(l)`, maximized by semismooth Newton
//! steps with `y(l) = max(0, v + A^T l / h)` and generalized Hessian
//! `A_F H_F^{-1} A_F^T`.

use super::ipm::{self, assemble_normal};
use super::linalg::EnvelopeCholesky;
use super::{inf_norm, Iterate, ReducedQP, SolverOptions};
use crate::error::{Error, Result};

const PROJECTION_ITERATIONS: usize = 100;
const PROJECTION_TOLERANCE: f64 = 1e-14;
const ARMIJO: f64 = 1e-4;

struct Projector<'a> {
    qp: &'a ReducedQP,
    h: &'a [f64],
    chol: EnvelopeCholesky,
    lambda: Vec<f64>,
}

impl Projector<'_> {
    fn primal(&self, v: &[f64], lambda: &[f64]) -> Vec<f64> {
        let at = self.qp.at_mul(lambda);
        (0..v.len()).map(|k| (v[k] + at[k] / self.h[k]).max(0.0)).collect()
    }

    fn dual_value(&self, v: &[f64], y: &[f64], lambda: &[f64]) -> f64 {
        let quad: f64 = (0..v.len()).map(|k| 0.5 * self.h[k] * (y[k] - v[k]).powi(2)).sum();
        let r = self.qp.equality_residual(y);
        quad - lambda.iter().zip(&r).map(|(l, r)| l * r).sum::<f64>()
    }

    /// Projects `v`, warm-starting from the previous multipliers.
    fn project(&mut self, v: &[f64], tolerance: f64) -> Result<Vec<f64>> {
        let b_scale = 1.0 + inf_norm(self.qp.b_eq());
        let mut lambda = self.lambda.clone();
        let mut y = self.primal(v, &lambda);
        let mut residual: Vec<f64> = self.qp.equality_residual(&y).iter().map(|r| -r).collect();
        for _ in 0..PROJECTION_ITERATIONS {
            let norm = inf_norm(&residual);
            if norm <= PROJECTION_TOLERANCE * b_scale {
                break;
            }
            let at = self.qp.at_mul(&lambda);
            let w: Vec<f64> = (0..v.len())
                .map(|k| if v[k] + at[k] / self.h[k] > 0.0 { 1.0 / self.h[k] } else { 0.0 })
                .collect();
            assemble_normal(&mut self.chol, self.qp, &w);
            let max_w = w.iter().copied().fold(0.0, f64::max);
            self.chol.shift_diagonal(1e-12 * max_w.max(1.0) * norm.min(1.0));
            self.chol.factor(ipm::SINGULAR_PIVOT);
            let d = self.chol.solve(&residual);
            let slope: f64 = d.iter().zip(&residual).map(|(a, b)| a * b).sum();
            let psi = self.dual_value(v, &y, &lambda);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..50 {
                let trial: Vec<f64> = lambda.iter().zip(&d).map(|(l, d)| l + t * d).collect();
                let y_trial = self.primal(v, &trial);
                let r_trial: Vec<f64> = self.qp.equality_residual(&y_trial).iter().map(|r| -r).collect();
                let ascent = self.dual_value(v, &y_trial, &trial) >= psi + ARMIJO * t * slope;
                if ascent || inf_norm(&r_trial) <= 0.5 * norm {
                    lambda = trial;
                    y = y_trial;
                    residual = r_trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let norm = inf_norm(&residual);
        if norm > tolerance {
            return Err(Error::NumericalBreakdown(format!(
                "projection stalled with constraint residual {norm:e}"
            )));
        }
        self.lambda = lambda;
        Ok(y)
    }
}

/// Gradient projection in the metric `diag(metric)`. With the Hessian as
/// metric a unit step reaches the minimizer, so the loop ends after one step
/// plus a confirming one.
pub(super) fn projected_gradient(
    qp: &ReducedQP,
    options: &SolverOptions,
    start: Vec<f64>,
    metric: &[f64],
) -> Result<Iterate> {
    let q = qp.hessian_diagonal();
    let c = qp.linear();
    let tol = options.kkt_tolerance;
    let mut projector = Projector {
        qp,
        h: metric,
        chol: EnvelopeCholesky::new(&qp.maps().adjacency()),
        lambda: vec![0.0; qp.n()],
    };
    let mut y = projector.project(&start, tol)?;
    let mut f = qp.objective(&y);
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let g: Vec<f64> = (0..y.len()).map(|k| q[k] * y[k] + c[k]).collect();
        let mut s = 1.0;
        let mut next = None;
        for _ in 0..40 {
            let v: Vec<f64> = (0..y.len()).map(|k| y[k] - s * g[k] / metric[k]).collect();
            let saved = projector.lambda.clone();
            let candidate = projector.project(&v, tol)?;
            let decrease: f64 = g.iter().zip(candidate.iter().zip(&y)).map(|(g, (a, b))| g * (a - b)).sum();
            let f_candidate = qp.objective(&candidate);
            if f_candidate <= f + ARMIJO * decrease {
                next = Some((candidate, f_candidate));
                break;
            }
            projector.lambda = saved;
            s *= 0.5;
        }
        let Some((candidate, f_candidate)) = next else {
            break;
        };
        let step = candidate.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = candidate;
        f = f_candidate;
        if step <= 1e-3 * tol {
            break;
        }
    }
    let (lambda, z) = super::recover_multipliers(qp, &y);
    Ok(Iterate {
        y,
        lambda,
        z,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_reduced_qp, kkt_residuals, solve_qp, SolverOptions};
    use super::*;
    use crate::sparse::{symmetrized_pattern, ProbabilityVector, SparseMatrix};

    fn instance() -> ReducedQP {
        let p = SparseMatrix::from_dense(&[
            vec![0.1, 0.6, 0.0, 0.3],
            vec![0.0, 0.2, 0.8, 0.0],
            vec![0.5, 0.0, 0.1, 0.4],
            vec![0.0, 0.7, 0.0, 0.3],
        ])
        .unwrap();
        let pi = ProbabilityVector::new(vec![0.2, 0.3, 0.35, 0.15]).unwrap();
        build_reduced_qp(&p, &pi, &symmetrized_pattern(&p)).unwrap()
    }

    #[test]
    fn projection_is_feasible_and_idempotent() {
        let qp = instance();
        let ones = vec![1.0; qp.y_m()];
        let mut projector = Projector {
            qp: &qp,
            h: &ones,
            chol: EnvelopeCholesky::new(&qp.maps().adjacency()),
            lambda: vec![0.0; qp.n()],
        };
        let v: Vec<f64> = (0..qp.y_m()).map(|k| (k as f64 * 1.3).sin()).collect();
        let y = projector.project(&v, 1e-12).unwrap();
        assert!(y.iter().all(|&x| x >= 0.0));
        assert!(inf_norm(&qp.equality_residual(&y)) <= 1e-13);
        let again = projector.project(&y, 1e-12).unwrap();
        let moved = again.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(moved < 1e-12);
    }

    #[test]
    fn identity_metric_decreases_monotonically_to_the_optimum() {
        let qp = instance();
        let ones = vec![1.0; qp.y_m()];
        let reference = solve_qp(&qp, &SolverOptions::default()).unwrap();
        let mut y = qp.feasible_point().to_vec();
        let mut f = qp.objective(&y);
        let one_step = SolverOptions {
            max_iterations: 1,
            ..SolverOptions::default()
        };
        for _ in 0..2000 {
            y = projected_gradient(&qp, &one_step, y, &ones).unwrap().y;
            let next = qp.objective(&y);
            assert!(next <= f + 1e-15);
            f = next;
        }
        assert!((f - reference.objective).abs() < 1e-10);
        let (lambda, z) = super::super::recover_multipliers(&qp, &y);
        assert!(kkt_residuals(&qp, &y, &lambda, &z).max() < 1e-6);
    }
}
