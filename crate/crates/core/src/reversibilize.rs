//! Closed-form reversibilization by Metropolis-Hastings or Barker acceptance.
//!
//! Off-diagonal entries become `T_ij = Q_ij * alpha_ij` and the diagonal takes
//! the remaining row mass. Both rules are evaluated through the balanced flux
//! `pi_i T_ij`, which is symmetric by construction, so the output satisfies
//! detailed balance up to one rounding per entry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{
    frobenius_distance, SparseMatrix, SparseStochasticMatrix, SparsityPattern,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AcceptanceRule {
    /// `alpha_ij = min(1, pi_j Q_ji / (pi_i Q_ij))`
    #[default]
    MetropolisHastings,
    /// `alpha_ij = pi_j Q_ji / (pi_i Q_ij + pi_j Q_ji)`
    Barker,
}

impl AcceptanceRule {
    /// Balanced flux `pi_i T_ij` given the two proposal fluxes.
    fn flux(self, forward: f64, backward: f64) -> f64 {
        match self {
            AcceptanceRule::MetropolisHastings => forward.min(backward),
            AcceptanceRule::Barker => forward * backward / (forward + backward),
        }
    }
}

const DIAGONAL_CLAMP: f64 = 1e-14;

/// Uniform proposal over the pattern: `Q = D_{M1}^{-1} M`.
pub fn proposal_from_pattern(pattern: &SparsityPattern) -> Result<SparseStochasticMatrix> {
    let n = pattern.n();
    let mut triplets = Vec::with_capacity(pattern.nnz());
    for i in 0..n {
        let row = pattern.row(i);
        if row.is_empty() {
            return Err(Error::ZeroRow(i));
        }
        let w = 1.0 / row.len() as f64;
        triplets.extend(row.iter().map(|&j| (i, j, w)));
    }
    SparseStochasticMatrix::new(SparseMatrix::from_triplets(n, n, triplets)?)
}

/// Applies the acceptance rule to the proposal `q`.
///
/// Edges without a reciprocal (`Q_ij > 0`, `Q_ji = 0`) are removed.
pub fn reversibilize(
    q: &SparseStochasticMatrix,
    pi: &[f64],
    rule: AcceptanceRule,
) -> Result<SparseStochasticMatrix> {
    let n = q.n();
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pi.len(),
        });
    }
    let mut triplets = Vec::with_capacity(q.nnz() + n);
    for i in 0..n {
        let (cols, vals) = q.row(i);
        let mut off_diagonal = 0.0;
        for (&j, &qij) in cols.iter().zip(vals) {
            if j == i {
                continue;
            }
            if pi[i] <= 0.0 {
                return Err(Error::NonPositivePi(i));
            }
            let qji = q.get(j, i);
            if qji == 0.0 {
                continue;
            }
            if pi[j] <= 0.0 {
                return Err(Error::NonPositivePi(j));
            }
            let flux = rule.flux(pi[i] * qij, pi[j] * qji);
            let tij = flux / pi[i];
            off_diagonal += tij;
            triplets.push((i, j, tij));
        }
        let mut diagonal = 1.0 - off_diagonal;
        if diagonal < 0.0 {
            if diagonal < -DIAGONAL_CLAMP {
                return Err(Error::NumericalBreakdown(format!(
                    "row {i} off-diagonal mass exceeds one by {:e}",
                    -diagonal
                )));
            }
            diagonal = 0.0;
        }
        triplets.push((i, i, diagonal));
    }
    SparseStochasticMatrix::new(SparseMatrix::from_triplets(n, n, triplets)?)
}

/// `||MH(P) - P||_F` where `MH(P)` reversibilizes `P` itself with respect to `pi`.
pub fn mh_baseline_distance(p: &SparseStochasticMatrix, pi: &[f64]) -> Result<f64> {
    let t = reversibilize(p, pi, AcceptanceRule::MetropolisHastings)?;
    frobenius_distance(&t, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{
        detailed_balance_residual, row_normalize, stationarity_residual, stochasticity_residual,
        symmetrized_pattern,
    };
    use proptest::prelude::*;

    #[test]
    fn proposal_examples() {
        let id = SparsityPattern::from_positions(3, (0..3).map(|i| (i, i))).unwrap();
        assert_eq!(proposal_from_pattern(&id).unwrap(), SparseStochasticMatrix::identity(3));

        let full = SparsityPattern::from_positions(4, (0..16).map(|k| (k / 4, k % 4))).unwrap();
        let q = proposal_from_pattern(&full).unwrap();
        assert!(q.values().iter().all(|&v| v == 0.25));

        let ring = SparsityPattern::from_positions(
            5,
            (0..5).flat_map(|i| [(i, i), (i, (i + 1) % 5), (i, (i + 4) % 5)]),
        )
        .unwrap();
        let q = proposal_from_pattern(&ring).unwrap();
        assert_eq!(q.nnz(), 15);
        assert!(q.values().iter().all(|&v| v == 1.0 / 3.0));

        let empty_row = SparsityPattern::from_positions(2, [(0, 0)]).unwrap();
        assert!(matches!(proposal_from_pattern(&empty_row), Err(Error::ZeroRow(1))));
    }

    #[test]
    fn fig1_metropolis_hastings() {
        let t = SparseStochasticMatrix::from_dense(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.0, 0.5],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let pi = [0.2, 0.2, 0.4, 0.2];
        let tt = reversibilize(&t, &pi, AcceptanceRule::MetropolisHastings).unwrap();
        let expected = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 1.0, 0.0],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!((tt.get(i, j) - v).abs() <= 1e-15, "({i}, {j})");
            }
        }
    }

    #[test]
    fn balanced_proposal_is_unchanged_by_mh() {
        let q = SparseStochasticMatrix::from_dense(&[
            vec![0.5, 0.5, 0.0],
            vec![0.25, 0.5, 0.25],
            vec![0.0, 0.5, 0.5],
        ])
        .unwrap();
        let pi = [0.25, 0.5, 0.25];
        let t = reversibilize(&q, &pi, AcceptanceRule::MetropolisHastings).unwrap();
        assert!(frobenius_distance(&t, &q).unwrap() < 1e-16);
        assert_eq!(mh_baseline_distance(&q, &pi).unwrap(), frobenius_distance(&t, &q).unwrap());
    }

    #[test]
    fn barker_halves_symmetric_proposals() {
        let q = SparseStochasticMatrix::from_dense(&[
            vec![0.2, 0.4, 0.4],
            vec![0.4, 0.2, 0.4],
            vec![0.4, 0.4, 0.2],
        ])
        .unwrap();
        let pi = [1.0 / 3.0; 3];
        let t = reversibilize(&q, &pi, AcceptanceRule::Barker).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.2 + 0.4 } else { 0.2 };
                assert!((t.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_zero_mass_states() {
        let q = SparseStochasticMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            reversibilize(&q, &[1.0, 0.0], AcceptanceRule::MetropolisHastings),
            Err(Error::NonPositivePi(1))
        ));
        assert!(matches!(
            reversibilize(&q, &[0.5], AcceptanceRule::Barker),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn arb_instance() -> impl Strategy<Value = (SparseStochasticMatrix, Vec<f64>)> {
        (3usize..9).prop_flat_map(|n| {
            (
                proptest::collection::vec((0..n, 0..n, 0.01f64..1.0), n..4 * n),
                proptest::collection::vec(0.01f64..1.0, n),
            )
                .prop_map(move |(t, w)| {
                    let diag = (0..n).map(|i| (i, i, 0.1));
                    let q = row_normalize(
                        &SparseMatrix::from_triplets(n, n, t.into_iter().chain(diag)).unwrap(),
                    )
                    .unwrap();
                    let total: f64 = w.iter().sum();
                    (q, w.into_iter().map(|x| x / total).collect())
                })
        })
    }

    proptest! {
        #[test]
        fn output_is_reversible_and_stochastic((q, pi) in arb_instance()) {
            for rule in [AcceptanceRule::MetropolisHastings, AcceptanceRule::Barker] {
                let t = reversibilize(&q, &pi, rule).unwrap();
                prop_assert!(detailed_balance_residual(&t, &pi).unwrap() <= 1e-14);
                prop_assert!(stochasticity_residual(&t) <= 1e-14);
                prop_assert!(stationarity_residual(&t, &pi).unwrap() <= 1e-13);
                let support = symmetrized_pattern(&q);
                for (i, j, _) in t.iter() {
                    prop_assert!(support.contains(i, j));
                    if i != j {
                        prop_assert!(q.get(i, j) > 0.0 && q.get(j, i) > 0.0);
                    }
                }
                for i in 0..q.n() {
                    prop_assert!(t.get(i, i) >= q.get(i, i) - 1e-15);
                }
            }
        }

        #[test]
        fn uniform_proposal_on_pattern_is_feasible(w in proptest::collection::vec(0.01f64..1.0, 6), extra in proptest::collection::vec((0usize..6, 0usize..6), 0..10)) {
            let total: f64 = w.iter().sum();
            let pi: Vec<f64> = w.iter().map(|x| x / total).collect();
            let pattern = SparsityPattern::from_positions(6, extra).unwrap().symmetrized();
            let q = proposal_from_pattern(&pattern).unwrap();
            let t = reversibilize(&q, &pi, AcceptanceRule::MetropolisHastings).unwrap();
            prop_assert!(detailed_balance_residual(&t, &pi).unwrap() <= 1e-14);
            for (i, j, _) in t.iter() {
                prop_assert!(pattern.contains(i, j));
            }
        }
    }
}
