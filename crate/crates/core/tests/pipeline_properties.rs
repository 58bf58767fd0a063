mod common;

use common::{random_irreducible, rng};
use proptest::prelude::*;
use rand::Rng;
use revchain_core::sparse::{row_normalize, SparseMatrix};
use revchain_core::{
    frobenius_distance, nearest_sparse_reversible, proposal_from_pattern, reversibilize, symmetrized_pattern,
    verify, AcceptanceRule, PipelineOptions, ProbabilityVector, SparseStochasticMatrix, SparsityPattern,
};

fn solve(p: &SparseStochasticMatrix) -> (SparseStochasticMatrix, revchain_core::PipelineDiagnostics) {
    nearest_sparse_reversible(p, &PipelineOptions::default()).unwrap()
}

fn block_diagonal(blocks: &[&SparseMatrix]) -> SparseStochasticMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut offset = 0;
    let mut triplets = Vec::new();
    for b in blocks {
        triplets.extend(b.iter().map(|(i, j, v)| (i + offset, j + offset, v)));
        offset += b.nrows();
    }
    SparseStochasticMatrix::new(SparseMatrix::from_triplets(n, n, triplets).unwrap()).unwrap()
}

#[test]
fn perturbing_one_block_only_changes_that_block() {
    // A symmetric block is reversible w.r.t. the uniform distribution.
    let reversible = SparseMatrix::from_dense(&[
        vec![0.5, 0.3, 0.2],
        vec![0.3, 0.4, 0.3],
        vec![0.2, 0.3, 0.5],
    ])
    .unwrap();
    let cyclic = SparseMatrix::from_dense(&[
        vec![0.2, 0.7, 0.0, 0.1],
        vec![0.0, 0.2, 0.8, 0.0],
        vec![0.1, 0.0, 0.3, 0.6],
        vec![0.9, 0.0, 0.0, 0.1],
    ])
    .unwrap();
    let p = block_diagonal(&[&reversible, &cyclic]);
    let (r, diag) = solve(&p);
    assert_eq!(diag.num_classes, 2);
    let (pd, rd) = (p.to_dense(), r.to_dense());
    for i in 0..3 {
        for j in 0..7 {
            assert!((pd[i][j] - rd[i][j]).abs() <= 1e-12, "({i}, {j})");
        }
    }
    assert!(diag.per_class[0].distance <= 1e-10);
    assert!(diag.per_class[1].distance > 1e-3);
    let total: f64 = diag.per_class.iter().map(|c| c.distance.powi(2)).sum();
    assert!((total.sqrt() - diag.delta_frobenius).abs() <= 1e-12);
}

#[test]
fn relabelling_states_relabels_the_result() {
    let mut rng = rng(11);
    for _ in 0..10 {
        let n = rng.random_range(3..25);
        let p = random_irreducible(&mut rng, n, 2 * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let permuted = SparseStochasticMatrix::new(
            SparseMatrix::from_triplets(n, n, p.iter().map(|(i, j, v)| (perm[i], perm[j], v))).unwrap(),
        )
        .unwrap();
        let (r, _) = solve(&p);
        let (rp, _) = solve(&permuted);
        let rd = r.to_dense();
        let rpd = rp.to_dense();
        for i in 0..n {
            for j in 0..n {
                assert!((rd[i][j] - rpd[perm[i]][perm[j]]).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn explicit_pattern_bounds_the_support() {
    let mut rng = rng(12);
    let n = 12;
    let p = random_irreducible(&mut rng, n, 10);
    let mut positions: Vec<(usize, usize)> = symmetrized_pattern(&p).positions().collect();
    for i in 0..n {
        positions.push((i, (i + 3) % n));
        positions.push(((i + 3) % n, i));
    }
    let pattern = SparsityPattern::from_positions(n, positions).unwrap();
    let options = PipelineOptions {
        pattern: Some(pattern.clone()),
        ..PipelineOptions::default()
    };
    let (r, widened) = nearest_sparse_reversible(&p, &options).unwrap();
    assert!(r.iter().all(|(i, j, _)| pattern.contains(i, j)));
    let (_, default) = solve(&p);
    // A larger admissible set can only bring the optimum closer.
    assert!(widened.delta_frobenius <= default.delta_frobenius + 1e-12);
}

#[test]
fn periodic_chain_is_handled() {
    // Deterministic 5-cycle: every reversible chain on its pattern must
    // stay on the symmetrized ring.
    let n = 5;
    let p = SparseStochasticMatrix::new(SparseMatrix::from_triplets(n, n, (0..n).map(|i| (i, (i + 1) % n, 1.0))).unwrap())
        .unwrap();
    let (r, diag) = solve(&p);
    assert!(diag.residuals.max() <= 1e-10);
    assert!(diag.delta_frobenius <= diag.mh_baseline_distance);
    let pattern = symmetrized_pattern(&p);
    assert!(r.iter().all(|(i, j, _)| pattern.contains(i, j)));
}

fn arb_chain() -> impl Strategy<Value = SparseStochasticMatrix> {
    (3usize..30).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.05f64..1.0, n),
            proptest::collection::vec((0..n, 0..n, 0.05f64..1.0), 0..3 * n),
        )
            .prop_map(move |(ring, extra)| {
                let triplets = ring
                    .into_iter()
                    .enumerate()
                    .map(|(i, w)| (i, (i + 1) % n, w))
                    .chain(extra);
                row_normalize(&SparseMatrix::from_triplets(n, n, triplets).unwrap()).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_dominates_metropolis_hastings(p in arb_chain()) {
        let (r, diag) = solve(&p);
        prop_assert!(diag.residuals.max() <= 1e-10, "{:?}", diag.residuals);
        prop_assert!(diag.delta_frobenius <= diag.mh_baseline_distance + 1e-12);
        prop_assert!(r.nnz() >= 1);
        let pattern = symmetrized_pattern(&p);
        prop_assert!(r.iter().all(|(i, j, _)| pattern.contains(i, j)));
        let distance = frobenius_distance(&r, &p).unwrap();
        prop_assert!((distance - diag.delta_frobenius).abs() <= 1e-12);
    }

    #[test]
    fn second_pass_is_a_fixed_point(p in arb_chain()) {
        let (once, _) = solve(&p);
        let (twice, diag) = solve(&once);
        prop_assert!(diag.delta_frobenius <= 1e-9);
        prop_assert!(frobenius_distance(&once, &twice).unwrap() <= 1e-9);
    }

    #[test]
    fn metropolis_hastings_output_verifies(p in arb_chain()) {
        let pi = common::stationary(&p);
        let proposal = proposal_from_pattern(&symmetrized_pattern(&p)).unwrap();
        for q in [&p, &proposal] {
            let t = reversibilize(q, pi.as_slice(), AcceptanceRule::MetropolisHastings).unwrap();
            let residuals = verify(&t, pi.as_slice()).unwrap();
            prop_assert!(residuals.max() <= 1e-13, "{:?}", residuals);
        }
    }
}

#[test]
fn transient_rows_are_copied_with_an_explicit_pi() {
    // State 2 leaks into the closed pair {0, 1}.
    let p = SparseStochasticMatrix::from_dense(&[
        vec![0.2, 0.8, 0.0],
        vec![0.6, 0.4, 0.0],
        vec![0.3, 0.3, 0.4],
    ])
    .unwrap();
    let pi = ProbabilityVector::new(vec![3.0 / 7.0, 4.0 / 7.0, 0.0]).unwrap();
    let options = PipelineOptions {
        pi: Some(pi),
        ..PipelineOptions::default()
    };
    let (r, diag) = nearest_sparse_reversible(&p, &options).unwrap();
    assert_eq!(diag.transient, vec![2]);
    assert_eq!(r.to_dense()[2], vec![0.3, 0.3, 0.4]);
    // A two-state chain is always reversible.
    assert!(diag.delta_frobenius <= 1e-12);
}
