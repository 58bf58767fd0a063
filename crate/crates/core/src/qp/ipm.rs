//! Mehrotra predictor-corrector for the reduced QP.
//!
//! The Hessian is diagonal, so each Newton system collapses to the `n x n`
//! normal equations `A H^{-1} A^T dl = r` with `H = Q + Y^{-1} Z`, whose
//! pattern is that of `M`. Once the iterate identifies the active set, the
//! equality-constrained problem on the free set is solved directly, which
//! lands on the optimum to rounding precision.

use super::linalg::EnvelopeCholesky;
use super::{inf_norm, Iterate, ReducedQP, SolverOptions};
use crate::error::Result;

const STEP_FRACTION: f64 = 0.995;
const MIN_START: f64 = 1e-8;
/// Polishing is attempted once the duality measure drops below this.
const POLISH_MU: f64 = 1e-5;
/// Relative pivot floors for the barrier systems and for the equality
/// systems on a fixed free set.
pub(super) const TINY_PIVOT: f64 = 1e-30;
pub(super) const SINGULAR_PIVOT: f64 = 1e-12;

/// Adds `A diag(w) A^T` to `chol`.
pub(super) fn assemble_normal(chol: &mut EnvelopeCholesky, qp: &ReducedQP, w: &[f64]) {
    chol.clear();
    let at = qp.a_transpose();
    for (k, &wk) in w.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        let (rows, coefs) = at.row(k);
        for a in 0..rows.len() {
            chol.add(rows[a], rows[a], wk * coefs[a] * coefs[a]);
            for b in 0..a {
                chol.add(rows[a], rows[b], wk * coefs[a] * coefs[b]);
            }
        }
    }
}

fn max_step(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// Solves the equality-constrained problem on `free` and accepts the result
/// if it is primal and dual feasible to `tolerance`.
pub(super) fn polish(
    qp: &ReducedQP,
    chol: &mut EnvelopeCholesky,
    free: &[bool],
    tolerance: f64,
) -> Option<Iterate> {
    let q = qp.hessian_diagonal();
    let c = qp.linear();
    let w: Vec<f64> = free
        .iter()
        .zip(q)
        .map(|(&f, &q)| if f { 1.0 / q } else { 0.0 })
        .collect();
    assemble_normal(chol, qp, &w);
    // Free sets on bipartite graphs give singular but consistent systems.
    chol.factor(SINGULAR_PIVOT);
    let primal = |lambda: &[f64]| -> Vec<f64> {
        let at_lambda = qp.at_mul(lambda);
        (0..w.len()).map(|k| w[k] * (at_lambda[k] - c[k])).collect()
    };
    // A_F Q_F^{-1} A_F^T lambda = b + A_F Q_F^{-1} c_F
    let wc: Vec<f64> = (0..w.len()).map(|k| w[k] * c[k]).collect();
    let mut rhs = qp.a_mul(&wc);
    rhs.iter_mut().zip(qp.b_eq()).for_each(|(r, b)| *r += b);
    let mut lambda = chol.solve(&rhs);
    let mut y = primal(&lambda);
    for _ in 0..2 {
        let r: Vec<f64> = qp.equality_residual(&y).iter().map(|v| -v).collect();
        let delta = chol.solve(&r);
        lambda.iter_mut().zip(&delta).for_each(|(l, d)| *l += d);
        y = primal(&lambda);
    }
    let at_lambda = qp.at_mul(&lambda);
    let mut z = vec![0.0; y.len()];
    for k in 0..y.len() {
        if free[k] {
            if y[k] < -super::NEGATIVE_TOLERANCE {
                return None;
            }
            y[k] = y[k].max(0.0);
        } else {
            let zk = c[k] - at_lambda[k];
            if zk < -tolerance {
                return None;
            }
            z[k] = zk.max(0.0);
        }
    }
    if inf_norm(&qp.equality_residual(&y)) > tolerance {
        return None;
    }
    Some(Iterate {
        y,
        lambda,
        z,
        iterations: 0,
    })
}

pub(super) fn interior_point(qp: &ReducedQP, options: &SolverOptions, start: Vec<f64>) -> Result<Iterate> {
    let m = qp.y_m();
    let q = qp.hessian_diagonal();
    let c = qp.linear();
    let tol = options.kkt_tolerance;
    let mut chol = EnvelopeCholesky::new(&qp.maps().adjacency());

    let mut y: Vec<f64> = start.into_iter().map(|v| v.max(MIN_START)).collect();
    let mut z = vec![1.0; m];
    let mut lambda = vec![0.0; qp.n()];
    let b_scale = 1.0 + inf_norm(qp.b_eq());
    let c_scale = 1.0 + inf_norm(c);

    let mut h_inv = vec![0.0; m];
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let r_p = qp.equality_residual(&y);
        let at_lambda = qp.at_mul(&lambda);
        let r_d: Vec<f64> = (0..m).map(|k| q[k] * y[k] + c[k] - at_lambda[k] - z[k]).collect();
        let mu = y.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() / m as f64;

        if mu <= POLISH_MU {
            let free: Vec<bool> = y.iter().zip(&z).map(|(a, b)| a > b).collect();
            if let Some(mut polished) = polish(qp, &mut chol, &free, tol) {
                if super::kkt_residuals(qp, &polished.y, &polished.lambda, &polished.z).within(tol) {
                    polished.iterations = iterations;
                    return Ok(polished);
                }
            }
        }
        if inf_norm(&r_p) <= tol * b_scale && inf_norm(&r_d) <= tol * c_scale && mu <= tol * tol {
            break;
        }

        for k in 0..m {
            h_inv[k] = 1.0 / (q[k] + z[k] / y[k]);
        }
        assemble_normal(&mut chol, qp, &h_inv);
        chol.factor(TINY_PIVOT);

        // Newton direction for complementarity target y z = rc.
        let direction = |rc: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            let rhs1: Vec<f64> = (0..m).map(|k| -r_d[k] - rc[k] / y[k]).collect();
            let h_rhs: Vec<f64> = (0..m).map(|k| h_inv[k] * rhs1[k]).collect();
            let mut rhs = qp.a_mul(&h_rhs);
            rhs.iter_mut().zip(&r_p).for_each(|(v, r)| *v = -*v - r);
            let dl = chol.solve(&rhs);
            let at_dl = qp.at_mul(&dl);
            let dy: Vec<f64> = (0..m).map(|k| h_inv[k] * (rhs1[k] + at_dl[k])).collect();
            let dz: Vec<f64> = (0..m).map(|k| (-rc[k] - z[k] * dy[k]) / y[k]).collect();
            (dy, dl, dz)
        };

        let rc_aff: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a * b).collect();
        let (dy_aff, _, dz_aff) = direction(&rc_aff);
        let a_p = max_step(&y, &dy_aff).min(1.0);
        let a_d = max_step(&z, &dz_aff).min(1.0);
        let mu_aff = (0..m)
            .map(|k| (y[k] + a_p * dy_aff[k]) * (z[k] + a_d * dz_aff[k]))
            .sum::<f64>()
            / m as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        let rc: Vec<f64> = (0..m)
            .map(|k| rc_aff[k] + dy_aff[k] * dz_aff[k] - sigma * mu)
            .collect();
        let (dy, dl, dz) = direction(&rc);
        let alpha = (STEP_FRACTION * max_step(&y, &dy).min(max_step(&z, &dz))).min(1.0);
        for k in 0..m {
            y[k] += alpha * dy[k];
            z[k] += alpha * dz[k];
        }
        lambda.iter_mut().zip(&dl).for_each(|(l, d)| *l += alpha * d);
    }
    let free: Vec<bool> = y.iter().zip(&z).map(|(a, b)| a > b).collect();
    if let Some(mut polished) = polish(qp, &mut chol, &free, tol) {
        polished.iterations = iterations;
        return Ok(polished);
    }
    Ok(Iterate {
        y,
        lambda,
        z,
        iterations,
    })
}
