//! Shared test oracles: the dense Kronecker formulation of the reduced QP and
//! small random instances.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revchain_core::sparse::{row_normalize, symmetrized_pattern, SparseMatrix};
use revchain_core::{
    stationary_distribution, ProbabilityVector, SparseStochasticMatrix, SparsityPattern,
    StationarySolveOptions,
};

/// Upper-triangular pattern positions in column-major order.
pub fn upper_positions(pattern: &SparsityPattern) -> Vec<(usize, usize)> {
    let n = pattern.n();
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            if pattern.contains(i, j) {
                out.push((i, j));
            }
        }
    }
    out
}

/// The reduced problem built from explicit `n^2`-sized operators.
pub struct DenseFormulation {
    /// `(D ⊗ D^{-1}) (I + K) Pi`, mapping `y` to `vec(X)`.
    pub lift: DMatrix<f64>,
    /// `Pi^T (I + K) Pi`.
    pub weighting: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
    /// `(pi_hat^T ⊗ I) (I + K) Pi`.
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub vec_p: DVector<f64>,
    pub pi: Vec<f64>,
}

fn commutation(n: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            // vec(A^T)[j + n i] = vec(A)[i + n j]
            k[(j + n * i, i + n * j)] = 1.0;
        }
    }
    k
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn dense_formulation(p: &SparseMatrix, pi: &[f64], pattern: &SparsityPattern) -> DenseFormulation {
    let n = pattern.n();
    let positions = upper_positions(pattern);
    let m = positions.len();
    let pi_hat: Vec<f64> = pi.iter().map(|v| v.sqrt()).collect();

    let mut selection = DMatrix::zeros(n * n, m);
    for (k, &(i, j)) in positions.iter().enumerate() {
        selection[(i + n * j, k)] = if i == j { 0.5 } else { 1.0 };
    }
    let symmetrize = DMatrix::identity(n * n, n * n) + commutation(n);
    let d = DMatrix::from_diagonal(&DVector::from_vec(pi_hat.clone()));
    let d_inv = DMatrix::from_diagonal(&DVector::from_iterator(n, pi_hat.iter().map(|v| 1.0 / v)));
    // vec(D^{-1} Y D) = (D^T ⊗ D^{-1}) vec(Y)
    let lift = kron(&d, &d_inv) * &symmetrize * &selection;
    let weighting = selection.transpose() * &symmetrize * &selection;

    let mut vec_p = DVector::zeros(n * n);
    for (i, j, v) in p.iter() {
        vec_p[i + n * j] = v;
    }
    let hessian = lift.transpose() * &lift;
    let linear = -(lift.transpose() * &vec_p);
    let constant = 0.5 * vec_p.norm_squared();

    let pi_hat_row = DMatrix::from_row_slice(1, n, &pi_hat);
    // Y pi_hat = vec(Y pi_hat) = (pi_hat^T ⊗ I) vec(Y)
    let a_eq = kron(&pi_hat_row, &DMatrix::identity(n, n)) * &symmetrize * &selection;
    DenseFormulation {
        lift,
        weighting,
        hessian,
        linear,
        constant,
        a_eq,
        b_eq: DVector::from_vec(pi_hat),
        vec_p,
        pi: pi.to_vec(),
    }
}

impl DenseFormulation {
    pub fn objective(&self, y: &[f64]) -> f64 {
        let x = &self.lift * DVector::from_column_slice(y);
        0.5 * (x - &self.vec_p).norm_squared()
    }

    /// `X(y)` as a dense matrix.
    pub fn chain(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.pi.len();
        let x = &self.lift * DVector::from_column_slice(y);
        DMatrix::from_column_slice(n, n, x.as_slice())
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random irreducible chain: a directed ring plus random extra edges and
/// self-loops, with uniform weights in `[0.05, 1)` before normalization.
pub fn random_irreducible(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> SparseStochasticMatrix {
    let mut triplets: Vec<(usize, usize, f64)> = (0..n)
        .map(|i| (i, (i + 1) % n, rng.random_range(0.05..1.0)))
        .collect();
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        triplets.push((i, j, rng.random_range(0.05..1.0)));
    }
    row_normalize(&SparseMatrix::from_triplets(n, n, triplets).unwrap()).unwrap()
}

pub fn stationary(p: &SparseMatrix) -> ProbabilityVector {
    stationary_distribution(p, &StationarySolveOptions::default()).unwrap()
}

/// Number of reduced unknowns of a symmetric pattern with full diagonal.
pub fn unknowns(pattern: &SparsityPattern) -> usize {
    (pattern.nnz() - pattern.n()) / 2 + pattern.n()
}

/// Random small instance whose reduced QP has at most `max_unknowns`
/// unknowns. Patterns alternate between the full pattern (when small enough)
/// and the symmetrized support plus random symmetric pairs.
pub fn small_instance(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_unknowns: usize,
) -> (SparseStochasticMatrix, ProbabilityVector, SparsityPattern) {
    loop {
        let n = rng.random_range(2..=max_n);
        let extra = rng.random_range(0..=n);
        let p = random_irreducible(rng, n, extra);
        let base = symmetrized_pattern(&p);
        if unknowns(&base) > max_unknowns {
            continue;
        }
        let full = SparsityPattern::from_positions(n, (0..n * n).map(|k| (k / n, k % n))).unwrap();
        let pattern = if rng.random_bool(0.5) && unknowns(&full) <= max_unknowns {
            full
        } else {
            let mut positions: Vec<(usize, usize)> = base.positions().collect();
            for _ in 0..rng.random_range(0..=n) {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                positions.push((i, j));
                positions.push((j, i));
            }
            let candidate = SparsityPattern::from_positions(n, positions).unwrap();
            if unknowns(&candidate) <= max_unknowns {
                candidate
            } else {
                base
            }
        };
        let pi = stationary(&p);
        return (p, pi, pattern);
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
