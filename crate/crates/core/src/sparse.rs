//! Sparse matrix and probability-vector primitives.
//!
//! Matrices are stored in compressed sparse row form with sorted column
//! indices and no stored zeros, so two matrices are equal exactly when their
//! canonical forms are equal.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums for a matrix to count as stochastic.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// Real sparse matrix in canonical CSR form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidMatrix(format!("non-finite entry at ({i}, {j})")));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if i2 == i && j2 == j {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds a matrix from dense rows, dropping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                found: bad.len(),
            });
        }
        Self::from_triplets(
            nrows,
            ncols,
            rows.iter()
                .enumerate()
                .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v))),
        )
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    /// Iterates over stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (i, j, v) in self.iter() {
            let slot = next[j];
            indices[slot] = i;
            values[slot] = v;
            next[j] += 1;
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
        }
    }

    /// Entrywise `self - other` over the union of supports.
    pub fn sub(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.check_same_shape(other)?;
        let triplets = self
            .iter()
            .chain(other.iter().map(|(i, j, v)| (i, j, -v)));
        SparseMatrix::from_triplets(self.nrows, self.ncols, triplets)
    }

    /// Principal submatrix on `states` (in the given order).
    pub fn principal_submatrix(&self, states: &[usize]) -> SparseMatrix {
        let mut local = vec![usize::MAX; self.ncols.max(self.nrows)];
        for (k, &s) in states.iter().enumerate() {
            local[s] = k;
        }
        let mut indptr = Vec::with_capacity(states.len() + 1);
        indptr.push(0);
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &s in states {
            entries.clear();
            let (cols, vals) = self.row(s);
            for (&j, &v) in cols.iter().zip(vals) {
                if local[j] != usize::MAX {
                    entries.push((local[j], v));
                }
            }
            entries.sort_by_key(|e| e.0);
            for &(j, v) in &entries {
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        SparseMatrix {
            nrows: states.len(),
            ncols: states.len(),
            indptr,
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            dense[i][j] = v;
        }
        dense
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_same_shape(&self, other: &SparseMatrix) -> Result<()> {
        if self.nrows != other.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: other.nrows,
            });
        }
        if self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: other.ncols,
            });
        }
        Ok(())
    }
}

/// A square, nonnegative sparse matrix whose rows sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseStochasticMatrix {
    matrix: SparseMatrix,
    row_sums: Vec<f64>,
}

impl SparseStochasticMatrix {
    /// Validates `matrix` as row stochastic within [`STOCHASTIC_TOLERANCE`].
    pub fn new(matrix: SparseMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if let Some((i, j, v)) = matrix.iter().find(|e| e.2 < 0.0) {
            return Err(Error::InvalidMatrix(format!(
                "negative entry {v:e} at ({i}, {j})"
            )));
        }
        let row_sums = matrix.row_sums();
        for (i, &s) in row_sums.iter().enumerate() {
            if matrix.row(i).0.is_empty() {
                return Err(Error::ZeroRow(i));
            }
            if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} sums to {s} (deviation {:e})",
                    s - 1.0
                )));
            }
        }
        Ok(Self { matrix, row_sums })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: SparseMatrix::identity(n),
            row_sums: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SparseMatrix::from_dense(rows)?)
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn as_matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn into_inner(self) -> SparseMatrix {
        self.matrix
    }
}

impl Deref for SparseStochasticMatrix {
    type Target = SparseMatrix;

    fn deref(&self) -> &SparseMatrix {
        &self.matrix
    }
}

impl<'de> Deserialize<'de> for SparseStochasticMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = SparseMatrix::deserialize(d)?;
        SparseStochasticMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// A probability distribution over `n` states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityVector {
    values: Vec<f64>,
}

impl ProbabilityVector {
    /// Validates `values`: finite, nonnegative, summing to one within 1e-12.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {v}, expected a nonnegative number"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self { values })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self {
            values: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            values: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Entries at or below this value count as zero.
    pub fn zero_threshold(&self) -> f64 {
        10.0 * f64::EPSILON * self.values.len() as f64
    }

    /// States with mass above [`Self::zero_threshold`].
    pub fn support(&self) -> Vec<usize> {
        let tau = self.zero_threshold();
        (0..self.values.len()).filter(|&i| self.values[i] > tau).collect()
    }

    pub fn is_strictly_positive(&self) -> bool {
        let tau = self.zero_threshold();
        self.values.iter().all(|&v| v > tau)
    }

    /// Entrywise square root, the diagonal of the similarity scaling.
    pub fn sqrt(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.sqrt()).collect()
    }

    /// Restriction to `states`, renormalized to sum to one.
    pub fn restrict(&self, states: &[usize]) -> Result<Self> {
        Self::from_weights(states.iter().map(|&s| self.values[s]).collect())
    }
}

impl Deref for ProbabilityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Binary support of an `n x n` matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SparsityPattern {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    symmetric: bool,
    full_diagonal: bool,
}

impl SparsityPattern {
    pub fn from_positions<I>(n: usize, positions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let m = SparseMatrix::from_triplets(n, n, positions.into_iter().map(|(i, j)| (i, j, 1.0)))?;
        Ok(Self::from_support(&m))
    }

    /// The support of `m` (which must be square).
    pub fn from_support(m: &SparseMatrix) -> Self {
        assert!(m.is_square(), "sparsity patterns are square");
        let n = m.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(m.nnz());
        for i in 0..n {
            indices.extend_from_slice(m.row(i).0);
            indptr.push(indices.len());
        }
        let mut pattern = Self {
            n,
            indptr,
            indices,
            symmetric: false,
            full_diagonal: false,
        };
        pattern.symmetric = pattern.find_unmatched().is_none();
        pattern.full_diagonal = pattern.find_missing_diagonal().is_none();
        pattern
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of positions in the pattern.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn has_full_diagonal(&self) -> bool {
        self.full_diagonal
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n && self.row(i).binary_search(&j).is_ok()
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    /// Pattern induced on `states` (in the given order).
    pub fn restrict(&self, states: &[usize]) -> SparsityPattern {
        let m = SparseMatrix::from_triplets(
            self.n,
            self.n,
            self.positions().map(|(i, j)| (i, j, 1.0)),
        )
        .expect("positions are in range");
        Self::from_support(&m.principal_submatrix(states))
    }

    /// First `(i, j)` whose transpose is absent.
    pub fn find_unmatched(&self) -> Option<(usize, usize)> {
        self.positions().find(|&(i, j)| !self.contains(j, i))
    }

    pub fn find_missing_diagonal(&self) -> Option<usize> {
        (0..self.n).find(|&i| !self.contains(i, i))
    }

    /// Checks that the pattern is symmetric with a full diagonal.
    pub fn require_symmetric_with_diagonal(&self) -> Result<()> {
        if let Some((i, j)) = self.find_unmatched() {
            return Err(Error::PatternNotSymmetric(i, j));
        }
        if let Some(i) = self.find_missing_diagonal() {
            return Err(Error::MissingDiagonal(i));
        }
        Ok(())
    }

    /// Union of this pattern, its transpose and the diagonal.
    pub fn symmetrized(&self) -> SparsityPattern {
        let positions = self
            .positions()
            .flat_map(|(i, j)| [(i, j), (j, i)])
            .chain((0..self.n).map(|i| (i, i)));
        Self::from_positions(self.n, positions).expect("positions are in range")
    }

    /// The pattern as a 0/1 matrix.
    pub fn to_matrix(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.n, self.n, self.positions().map(|(i, j)| (i, j, 1.0)))
            .expect("positions are in range")
    }
}

/// Divides each row of a nonnegative matrix by its sum.
pub fn row_normalize(counts: &SparseMatrix) -> Result<SparseStochasticMatrix> {
    if let Some((i, j, v)) = counts.iter().find(|e| e.2 < 0.0) {
        return Err(Error::InvalidMatrix(format!(
            "negative entry {v} at ({i}, {j})"
        )));
    }
    let sums = counts.row_sums();
    if let Some(i) = sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroRow(i));
    }
    let normalized = SparseMatrix::from_triplets(
        counts.nrows(),
        counts.ncols(),
        counts.iter().map(|(i, j, v)| (i, j, v / sums[i])),
    )?;
    SparseStochasticMatrix::new(normalized)
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `max |pi_i P_ij - pi_j P_ji|` over all pairs.
pub fn detailed_balance_residual(p: &SparseMatrix, pi: &[f64]) -> Result<f64> {
    check_len(p.nrows(), pi.len())?;
    check_len(p.nrows(), p.ncols())?;
    Ok(p.iter()
        .map(|(i, j, v)| (pi[i] * v - pi[j] * p.get(j, i)).abs())
        .fold(0.0, f64::max))
}

/// `max_i |sum_j P_ij - 1|`.
pub fn stochasticity_residual(p: &SparseMatrix) -> f64 {
    p.row_sums()
        .into_iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max_j |(pi^T P)_j - pi_j|`.
pub fn stationarity_residual(p: &SparseMatrix, pi: &[f64]) -> Result<f64> {
    check_len(p.nrows(), pi.len())?;
    check_len(p.nrows(), p.ncols())?;
    let mut image = vec![0.0; p.ncols()];
    for (i, j, v) in p.iter() {
        image[j] += pi[i] * v;
    }
    Ok(image
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &SparseMatrix, b: &SparseMatrix) -> Result<f64> {
    a.check_same_shape(b)?;
    let mut total = 0.0;
    for i in 0..a.nrows() {
        let (ca, va) = a.row(i);
        let (cb, vb) = b.row(i);
        let (mut x, mut y) = (0, 0);
        while x < ca.len() || y < cb.len() {
            let d = match (ca.get(x), cb.get(y)) {
                (Some(&ja), Some(&jb)) if ja == jb => {
                    x += 1;
                    y += 1;
                    va[x - 1] - vb[y - 1]
                }
                (Some(&ja), Some(&jb)) if ja < jb => {
                    x += 1;
                    va[x - 1]
                }
                (Some(_), None) => {
                    x += 1;
                    va[x - 1]
                }
                _ => {
                    y += 1;
                    -vb[y - 1]
                }
            };
            total += d * d;
        }
    }
    Ok(total.sqrt())
}

/// Support of `P + P^T + I`.
pub fn symmetrized_pattern(p: &SparseMatrix) -> SparsityPattern {
    SparsityPattern::from_support(p).symmetrized()
}
