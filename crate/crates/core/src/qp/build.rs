//! Reduced QP assembly.
//!
//! A reversible `X` with stationary `pi` and pattern `M` corresponds to the
//! symmetric `Y = D X D^{-1}`, `D = diag(sqrt(pi))`, with `Y sqrt(pi) =
//! sqrt(pi)` and `Y >= 0`. Only the upper triangle of `Y` is free, giving
//! `y_M = (s_M - n) / 2 + n` unknowns.
//!
//! With `a = sqrt(pi_j / pi_i)`, an off-diagonal unknown `y = Y_ij` sets
//! `X_ij = a y` and `X_ji = y / a`, so the Hessian of `1/2 ||X - P||_F^2` is
//! diagonal: `pi_j / pi_i + pi_i / pi_j` for off-diagonal unknowns and `1` on
//! the diagonal. The dense Kronecker construction in the test suite checks
//! this against the factored operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reversibilize::{proposal_from_pattern, reversibilize, AcceptanceRule};
use crate::sparse::{
    stochasticity_residual, ProbabilityVector, SparseMatrix, SparseStochasticMatrix,
    SparsityPattern, STOCHASTIC_TOLERANCE,
};

/// Negative unknowns down to this value are treated as rounding and clamped.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Bijection between pattern positions and reduced unknowns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexMaps {
    n: usize,
    /// `(i, j)` with `i <= j`, ordered by column then row.
    upper: Vec<(usize, usize)>,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vars: Vec<usize>,
}

impl IndexMaps {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of reduced unknowns.
    pub fn y_m(&self) -> usize {
        self.upper.len()
    }

    pub fn upper_positions(&self) -> &[(usize, usize)] {
        &self.upper
    }

    /// Unknown holding `Y_ij` (and `Y_ji`), if `(i, j)` is in the pattern.
    pub fn k_of(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n {
            return None;
        }
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_cols[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|pos| self.row_vars[range.start + pos])
    }

    /// Position of `(i, j)` in the column-major vectorization.
    pub fn r_of(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Pattern positions of row `i` with their unknowns.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.row_cols[range.clone()]
            .iter()
            .copied()
            .zip(self.row_vars[range].iter().copied())
    }

    /// Weights `d` with `Pi^T (I + K) Pi y = diag(d) y`: 1 off the diagonal,
    /// 1/2 on it.
    pub fn weighting(&self) -> Vec<f64> {
        self.upper
            .iter()
            .map(|&(i, j)| if i == j { 0.5 } else { 1.0 })
            .collect()
    }

    /// Reads the upper-triangular unknowns out of a symmetric matrix.
    pub fn extract(&self, y: &SparseMatrix) -> Vec<f64> {
        self.upper.iter().map(|&(i, j)| y.get(i, j)).collect()
    }

    /// Symmetric adjacency of the rows coupled by each unknown.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| self.row(i).map(|(j, _)| j).collect()).collect()
    }

    fn check_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.y_m() {
            return Err(Error::LengthMismatch {
                expected: self.y_m(),
                found: y.len(),
            });
        }
        Ok(())
    }
}

pub fn build_index_maps(pattern: &SparsityPattern) -> Result<IndexMaps> {
    pattern.require_symmetric_with_diagonal()?;
    let n = pattern.n();
    let mut upper = Vec::with_capacity((pattern.nnz() + n) / 2);
    for j in 0..n {
        // Column j of a symmetric pattern equals row j.
        upper.extend(pattern.row(j).iter().take_while(|&&i| i <= j).map(|&i| (i, j)));
    }
    let mut var_of_upper = std::collections::HashMap::with_capacity(upper.len());
    for (k, &pos) in upper.iter().enumerate() {
        var_of_upper.insert(pos, k);
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut row_cols = Vec::with_capacity(pattern.nnz());
    let mut row_vars = Vec::with_capacity(pattern.nnz());
    for i in 0..n {
        for &j in pattern.row(i) {
            row_cols.push(j);
            row_vars.push(var_of_upper[&(i.min(j), i.max(j))]);
        }
        row_ptr.push(row_cols.len());
    }
    Ok(IndexMaps {
        n,
        upper,
        row_ptr,
        row_cols,
        row_vars,
    })
}

/// `Y = S(y) + S(y)^T`.
pub fn expand_symmetric(y: &[f64], maps: &IndexMaps) -> Result<SparseMatrix> {
    maps.check_len(y)?;
    let triplets = maps.upper.iter().zip(y).flat_map(|(&(i, j), &v)| {
        let mirror = (i != j).then_some((j, i, v));
        std::iter::once((i, j, v)).chain(mirror)
    });
    SparseMatrix::from_triplets(maps.n, maps.n, triplets)
}

/// `vec(D^{-1} Y D)` in column-major order, without forming Kronecker
/// products.
pub fn apply_reduced_operator(y: &[f64], maps: &IndexMaps, pi_hat: &[f64]) -> Result<Vec<f64>> {
    maps.check_len(y)?;
    if pi_hat.len() != maps.n {
        return Err(Error::DimensionMismatch {
            expected: maps.n,
            found: pi_hat.len(),
        });
    }
    let n = maps.n;
    let mut out = vec![0.0; n * n];
    for (&(i, j), &v) in maps.upper.iter().zip(y) {
        out[maps.r_of(i, j)] = v * pi_hat[j] / pi_hat[i];
        if i != j {
            out[maps.r_of(j, i)] = v * pi_hat[i] / pi_hat[j];
        }
    }
    Ok(out)
}

/// The reduced problem `min 1/2 y'Qy + c'y  s.t.  A y = b, y >= 0`.
#[derive(Debug, Clone)]
pub struct ReducedQP {
    maps: IndexMaps,
    hessian: Vec<f64>,
    linear: Vec<f64>,
    /// Transpose of the equality matrix: row `k` lists the constraint rows
    /// touched by unknown `k`.
    a_transpose: SparseMatrix,
    b_eq: Vec<f64>,
    pi_hat: Vec<f64>,
    constant: f64,
    feasible_point: Vec<f64>,
}

impl ReducedQP {
    pub fn maps(&self) -> &IndexMaps {
        &self.maps
    }

    pub fn n(&self) -> usize {
        self.maps.n
    }

    pub fn y_m(&self) -> usize {
        self.maps.y_m()
    }

    /// Diagonal of `Q`.
    pub fn hessian_diagonal(&self) -> &[f64] {
        &self.hessian
    }

    /// `Q` as `(row, col, value)` triplets.
    pub fn hessian_triplets(&self) -> Vec<(usize, usize, f64)> {
        self.hessian.iter().enumerate().map(|(k, &q)| (k, k, q)).collect()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// `A_eq` as an `n x y_M` matrix.
    pub fn a_eq(&self) -> SparseMatrix {
        self.a_transpose.transpose()
    }

    pub(crate) fn a_transpose(&self) -> &SparseMatrix {
        &self.a_transpose
    }

    pub fn b_eq(&self) -> &[f64] {
        &self.b_eq
    }

    pub fn pi_hat(&self) -> &[f64] {
        &self.pi_hat
    }

    /// `1/2 ||P||_F^2`, so that `objective(y) = 1/2 ||X(y) - P||_F^2`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// A feasible point from Metropolis-Hastings reversibilization.
    pub fn feasible_point(&self) -> &[f64] {
        &self.feasible_point
    }

    pub fn objective(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(&self.hessian)
            .zip(&self.linear)
            .map(|((&v, &q), &c)| 0.5 * q * v * v + c * v)
            .sum::<f64>()
            + self.constant
    }

    /// `A y`.
    pub fn a_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (k, &v) in y.iter().enumerate() {
            let (rows, coefs) = self.a_transpose.row(k);
            for (&i, &a) in rows.iter().zip(coefs) {
                out[i] += a * v;
            }
        }
        out
    }

    /// `A^T lambda`.
    pub fn at_mul(&self, lambda: &[f64]) -> Vec<f64> {
        (0..self.y_m())
            .map(|k| {
                let (rows, coefs) = self.a_transpose.row(k);
                rows.iter().zip(coefs).map(|(&i, &a)| a * lambda[i]).sum()
            })
            .collect()
    }

    /// `A y - b`.
    pub fn equality_residual(&self, y: &[f64]) -> Vec<f64> {
        let mut r = self.a_mul(y);
        r.iter_mut().zip(&self.b_eq).for_each(|(r, b)| *r -= b);
        r
    }

    /// Serializable snapshot for cross-checking with external solvers.
    pub fn to_dump(&self) -> QpDump {
        QpDump {
            version: QpDump::VERSION,
            n: self.n(),
            y_m: self.y_m(),
            upper_positions: self.maps.upper.clone(),
            hessian: self.hessian_triplets(),
            linear: self.linear.clone(),
            a_eq: self.a_eq().iter().collect(),
            b_eq: self.b_eq.clone(),
            constant: self.constant,
        }
    }
}

/// JSON debug dump of a [`ReducedQP`]. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpDump {
    pub version: u32,
    pub n: usize,
    pub y_m: usize,
    pub upper_positions: Vec<(usize, usize)>,
    pub hessian: Vec<(usize, usize, f64)>,
    pub linear: Vec<f64>,
    pub a_eq: Vec<(usize, usize, f64)>,
    pub b_eq: Vec<f64>,
    pub constant: f64,
}

impl QpDump {
    pub const VERSION: u32 = 1;
}

/// Assembles the reduced QP for `P`, stationary `pi` and pattern `M`.
pub fn build_reduced_qp(
    p: &SparseMatrix,
    pi: &ProbabilityVector,
    pattern: &SparsityPattern,
) -> Result<ReducedQP> {
    let n = pattern.n();
    for found in [p.nrows(), p.ncols(), pi.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    if let Some(i) = pi.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositivePi(i));
    }
    let maps = build_index_maps(pattern)?;
    let pi_hat = pi.sqrt();
    let y_m = maps.y_m();

    let mut hessian = Vec::with_capacity(y_m);
    let mut linear = Vec::with_capacity(y_m);
    let mut a_triplets = Vec::with_capacity(2 * y_m);
    for (k, &(i, j)) in maps.upper.iter().enumerate() {
        if i == j {
            hessian.push(1.0);
            linear.push(-p.get(i, i));
            a_triplets.push((k, i, pi_hat[i]));
        } else {
            let up = pi_hat[j] / pi_hat[i];
            let down = pi_hat[i] / pi_hat[j];
            hessian.push(pi[j] / pi[i] + pi[i] / pi[j]);
            linear.push(-(up * p.get(i, j) + down * p.get(j, i)));
            a_triplets.push((k, i, pi_hat[j]));
            a_triplets.push((k, j, pi_hat[i]));
        }
    }
    let a_transpose = SparseMatrix::from_triplets(y_m, n, a_triplets)?;
    let constant = 0.5 * p.values().iter().map(|v| v * v).sum::<f64>();

    let contains_support = p.iter().all(|(i, j, _)| pattern.contains(i, j));
    let proposal = match SparseStochasticMatrix::new(p.clone()) {
        Ok(stochastic) if contains_support => stochastic,
        _ => proposal_from_pattern(pattern)?,
    };
    let mh = reversibilize(&proposal, pi, AcceptanceRule::MetropolisHastings)?;
    let feasible_point = maps
        .upper
        .iter()
        .map(|&(i, j)| mh.get(i, j) * pi_hat[i] / pi_hat[j])
        .collect();

    Ok(ReducedQP {
        maps,
        hessian,
        linear,
        a_transpose,
        b_eq: pi_hat.clone(),
        pi_hat,
        constant,
        feasible_point,
    })
}

/// `R = D^{-1} (S(y) + S(y)^T) D`, clamping rounding-level negatives.
///
/// Rows are renormalized only if the row-sum error exceeds the stochastic
/// tolerance, which is logged.
pub fn unscale_solution(y: &[f64], maps: &IndexMaps, pi_hat: &[f64]) -> Result<SparseStochasticMatrix> {
    maps.check_len(y)?;
    if pi_hat.len() != maps.n {
        return Err(Error::DimensionMismatch {
            expected: maps.n,
            found: pi_hat.len(),
        });
    }
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, &v)| v < -NEGATIVE_TOLERANCE) {
        return Err(Error::NegativeEntry { index, value });
    }
    let triplets = maps.upper.iter().zip(y).flat_map(|(&(i, j), &v)| {
        let v = v.max(0.0);
        let mirror = (i != j).then(|| (j, i, v * pi_hat[i] / pi_hat[j]));
        std::iter::once((i, j, v * pi_hat[j] / pi_hat[i])).chain(mirror)
    });
    let r = SparseMatrix::from_triplets(maps.n, maps.n, triplets)?;
    let deviation = stochasticity_residual(&r);
    if deviation > STOCHASTIC_TOLERANCE {
        log::warn!("unscaled solution has row-sum error {deviation:e}; renormalizing rows");
        return crate::sparse::row_normalize(&r);
    }
    SparseStochasticMatrix::new(r)
}
