//! Exhaustive active-set enumeration for tiny instances.
//!
//! Every support set is tried with a dense KKT solve; the best candidate that
//! satisfies primal feasibility and the sign conditions on the multipliers is
//! returned. Intended for cross-checking the iterative solvers.

use nalgebra::{DMatrix, DVector};

use super::ReducedQP;
use crate::error::{Error, Result};

/// Largest number of unknowns accepted by [`oracle_solve`].
pub const ORACLE_LIMIT: usize = 16;

const FEASIBILITY: f64 = 1e-9;
const NEGATIVITY: f64 = 1e-12;
const DUAL_SIGN: f64 = 1e-9;

pub fn oracle_solve(qp: &ReducedQP) -> Result<Vec<f64>> {
    let m = qp.y_m();
    let n = qp.n();
    if m > ORACLE_LIMIT {
        return Err(Error::TooLarge(m));
    }
    let q = qp.hessian_diagonal();
    let c = qp.linear();
    let b = qp.b_eq();
    let a = {
        let mut a = DMatrix::<f64>::zeros(n, m);
        for (i, k, v) in qp.a_eq().iter() {
            a[(i, k)] = v;
        }
        a
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << m) {
        let free: Vec<usize> = (0..m).filter(|&k| mask & (1 << k) != 0).collect();
        // Every row needs a free unknown since b > 0.
        if (0..n).any(|i| free.iter().all(|&k| a[(i, k)] == 0.0)) {
            continue;
        }
        let f = free.len();
        let mut kkt = DMatrix::<f64>::zeros(f + n, f + n);
        let mut rhs = DVector::<f64>::zeros(f + n);
        for (s, &k) in free.iter().enumerate() {
            kkt[(s, s)] = q[k];
            rhs[s] = -c[k];
            for i in 0..n {
                kkt[(s, f + i)] = -a[(i, k)];
                kkt[(f + i, s)] = a[(i, k)];
            }
        }
        for i in 0..n {
            rhs[f + i] = b[i];
        }
        let solution = match kkt.clone().lu().solve(&rhs) {
            Some(x) if x.iter().all(|v| v.is_finite()) => x,
            _ => match kkt.clone().svd(true, true).solve(&rhs, 1e-12) {
                Ok(x) => x,
                Err(_) => continue,
            },
        };
        let mut y = vec![0.0; m];
        for (s, &k) in free.iter().enumerate() {
            y[k] = solution[s];
        }
        let lambda: Vec<f64> = (0..n).map(|i| solution[f + i]).collect();
        if y.iter().any(|&v| v < -NEGATIVITY) {
            continue;
        }
        let residual = (0..n)
            .map(|i| ((0..m).map(|k| a[(i, k)] * y[k]).sum::<f64>() - b[i]).abs())
            .fold(0.0, f64::max);
        if residual > FEASIBILITY {
            continue;
        }
        let dual_ok = (0..m).filter(|k| mask & (1 << k) == 0).all(|k| {
            let z = c[k] - (0..n).map(|i| a[(i, k)] * lambda[i]).sum::<f64>();
            z >= -DUAL_SIGN
        });
        if !dual_ok {
            continue;
        }
        y.iter_mut().for_each(|v| *v = v.max(0.0));
        let objective = qp.objective(&y);
        if best.as_ref().is_none_or(|(o, _)| objective < *o) {
            best = Some((objective, y));
        }
    }
    best.map(|(_, y)| y).ok_or(Error::Infeasible)
}
