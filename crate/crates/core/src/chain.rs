//! Stationary distributions, strongly connected components, ergodic
//! decomposition and cycle-based reversibility diagnostics.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::{stationarity_residual, ProbabilityVector, SparseMatrix};

/// Largest block handled by the dense direct stationary solver.
pub const DENSE_LIMIT: usize = 2000;

/// How a stationary distribution is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum StationaryMethod {
    /// Closed classes are solved exactly by GTH elimination and weighted by
    /// the absorption probabilities of the initial distribution, which is the
    /// limit of the power iteration without iterating.
    #[default]
    Direct,
    /// Plain power iteration, switching to the lazy chain `(P + I) / 2` once
    /// the residual stops decreasing (periodic chains).
    PowerIteration,
}

#[derive(Debug, Clone)]
pub struct StationarySolveOptions {
    /// Defaults to `100 n` when `None`.
    pub max_iterations: Option<usize>,
    pub tolerance: f64,
    /// Defaults to the uniform distribution.
    pub initial_distribution: Option<ProbabilityVector>,
    pub method: StationaryMethod,
}

impl Default for StationarySolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            tolerance: 1e-13,
            initial_distribution: None,
            method: StationaryMethod::Direct,
        }
    }
}

/// Strongly connected components of the directed graph with an edge `i -> j`
/// for every stored entry, in reverse topological order.
///
/// DFS roots and neighbors are visited by increasing index; states within a
/// component are sorted.
pub fn strongly_connected_components(p: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = p.nrows();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut counter = 0;
    // (vertex, position in its adjacency list)
    let mut call_stack: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call_stack.push((root, 0));
        index[root] = counter;
        lowlink[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call_stack.last_mut() {
            let adj = p.row(v).0;
            if *pos < adj.len() {
                let w = adj[*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    lowlink[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call_stack.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            call_stack.pop();
            if let Some(&(parent, _)) = call_stack.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                component.sort_unstable();
                components.push(component);
            }
        }
    }
    components
}

pub fn is_irreducible(p: &SparseMatrix) -> bool {
    strongly_connected_components(p).len() == 1
}

/// Components with no edge leaving them.
fn closed_components(p: &SparseMatrix, components: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let mut label = vec![0usize; p.nrows()];
    for (c, comp) in components.iter().enumerate() {
        for &s in comp {
            label[s] = c;
        }
    }
    let mut closed = Vec::new();
    let mut open = Vec::new();
    for (c, comp) in components.iter().enumerate() {
        let leaks = comp
            .iter()
            .any(|&s| p.row(s).0.iter().any(|&j| label[j] != c));
        if leaks {
            open.push(c);
        } else {
            closed.push(c);
        }
    }
    (closed, open)
}

/// Stationary vector of an irreducible block by Grassmann-Taksar-Heyman
/// elimination (subtraction free, so accurate to machine precision).
fn gth(block: &SparseMatrix) -> Result<Vec<f64>> {
    let m = block.nrows();
    let mut a = block.to_dense();
    for k in (1..m).rev() {
        let s: f64 = a[k][..k].iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidMatrix(
                "GTH elimination hit a reducible block".into(),
            ));
        }
        let (upper, lower) = a.split_at_mut(k);
        let row_k = &lower[0];
        for row_i in upper.iter_mut() {
            row_i[k] /= s;
            let f = row_i[k];
            if f != 0.0 {
                for j in 0..k {
                    row_i[j] += f * row_k[j];
                }
            }
        }
    }
    let mut pi = vec![0.0; m];
    pi[0] = 1.0;
    for j in 1..m {
        pi[j] = (0..j).map(|i| pi[i] * a[i][j]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}

fn power_iteration(
    p: &SparseMatrix,
    start: Vec<f64>,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    const WINDOW: usize = 50;
    let n = p.nrows();
    let mut pi = start;
    let mut next = vec![0.0; n];
    let mut lazy = false;
    let mut window_start = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 0..max_iterations {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, j, v) in p.iter() {
            next[j] += pi[i] * v;
        }
        residual = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= tolerance {
            return Ok(pi);
        }
        if lazy {
            for (x, y) in pi.iter_mut().zip(&next) {
                *x = 0.5 * (*x + *y);
            }
        } else {
            std::mem::swap(&mut pi, &mut next);
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= total);

        if it % WINDOW == WINDOW - 1 {
            if !lazy && residual >= window_start {
                log::debug!("power iteration stalled at {residual:e}; switching to the lazy chain");
                lazy = true;
            }
            window_start = residual;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iterations,
        residual,
    })
}

/// Absorption probabilities `H[t][c]` of transient states into closed classes.
fn absorption(
    p: &SparseMatrix,
    transient: &[usize],
    class_of: &[Option<usize>],
    n_classes: usize,
) -> Result<Vec<Vec<f64>>> {
    let t = transient.len();
    let mut local = vec![usize::MAX; p.nrows()];
    for (k, &s) in transient.iter().enumerate() {
        local[s] = k;
    }
    let mut system = DMatrix::<f64>::identity(t, t);
    let mut rhs = DMatrix::<f64>::zeros(t, n_classes);
    for (k, &s) in transient.iter().enumerate() {
        let (cols, vals) = p.row(s);
        for (&j, &v) in cols.iter().zip(vals) {
            if local[j] != usize::MAX {
                system[(k, local[j])] -= v;
            } else if let Some(c) = class_of[j] {
                rhs[(k, c)] += v;
            }
        }
    }
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalBreakdown("singular transient block".into()))?;
    Ok((0..t)
        .map(|k| (0..n_classes).map(|c| solution[(k, c)]).collect())
        .collect())
}

fn direct_stationary(p: &SparseMatrix, start: &[f64], opts: &StationarySolveOptions) -> Result<Vec<f64>> {
    let n = p.nrows();
    let components = strongly_connected_components(p);
    let (closed, open) = closed_components(p, &components);
    let transient: Vec<usize> = open.iter().flat_map(|&c| components[c].iter().copied()).collect();

    let mut class_of = vec![None; n];
    for (k, &c) in closed.iter().enumerate() {
        for &s in &components[c] {
            class_of[s] = Some(k);
        }
    }

    let mut weights: Vec<f64> = closed
        .iter()
        .map(|&c| components[c].iter().map(|&s| start[s]).sum())
        .collect();
    if !transient.is_empty() {
        if transient.len() > DENSE_LIMIT {
            return power_iteration(p, start.to_vec(), opts.tolerance, opts.max_iterations.unwrap_or(100 * n));
        }
        let h = absorption(p, &transient, &class_of, closed.len())?;
        for (k, &s) in transient.iter().enumerate() {
            for (c, w) in weights.iter_mut().enumerate() {
                *w += start[s] * h[k][c];
            }
        }
    }

    let mut pi = vec![0.0; n];
    for (k, &c) in closed.iter().enumerate() {
        let states = &components[c];
        let block = p.principal_submatrix(states);
        let local = if states.len() <= DENSE_LIMIT {
            gth(&block)?
        } else {
            let m = states.len();
            power_iteration(&block, vec![1.0 / m as f64; m], opts.tolerance, opts.max_iterations.unwrap_or(100 * m))?
        };
        for (&s, v) in states.iter().zip(local) {
            pi[s] = weights[k] * v;
        }
    }
    Ok(pi)
}

/// Stationary distribution reached from the initial distribution, i.e. the
/// limit of `pi0^T P^k`.
///
/// For reducible chains the result depends on the initial distribution, but
/// its zero set is exactly the set of transient states.
pub fn stationary_distribution(
    p: &SparseMatrix,
    opts: &StationarySolveOptions,
) -> Result<ProbabilityVector> {
    let n = p.nrows();
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.ncols(),
        });
    }
    if opts.tolerance <= 0.0 || opts.tolerance.is_nan() {
        return Err(Error::InvalidDistribution("tolerance must be positive".into()));
    }
    let start = match &opts.initial_distribution {
        Some(pi0) => {
            if pi0.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: pi0.len(),
                });
            }
            if !pi0.is_strictly_positive() {
                return Err(Error::InvalidDistribution(
                    "initial distribution must be strictly positive".into(),
                ));
            }
            pi0.to_vec()
        }
        None => vec![1.0 / n as f64; n],
    };

    let raw = match opts.method {
        StationaryMethod::Direct => direct_stationary(p, &start, opts)?,
        StationaryMethod::PowerIteration => {
            let mut pi =
                power_iteration(p, start, opts.tolerance, opts.max_iterations.unwrap_or(100 * n))?;
            // The limit vanishes outside closed classes; remove the geometric tail.
            let components = strongly_connected_components(p);
            let (_, open) = closed_components(p, &components);
            for &c in &open {
                for &s in &components[c] {
                    pi[s] = 0.0;
                }
            }
            pi
        }
    };

    let threshold = 10.0 * f64::EPSILON * n as f64;
    let cleaned: Vec<f64> = raw
        .into_iter()
        .map(|v| if v > threshold { v } else { 0.0 })
        .collect();
    let pi = ProbabilityVector::from_weights(cleaned)?;
    let residual = stationarity_residual(p, &pi)?;
    if residual > opts.tolerance {
        return Err(Error::NotConverged {
            iterations: 0,
            residual,
        });
    }
    Ok(pi)
}

/// Closed classes and transient states of a chain relative to a stationary
/// distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicDecomposition {
    /// Closed irreducible classes, each sorted, ordered by smallest state.
    pub classes: Vec<Vec<usize>>,
    /// States outside the support of the stationary distribution.
    pub transient: Vec<usize>,
    /// Original state index at each position of the block ordering
    /// (classes first, then transient states).
    pub permutation: Vec<usize>,
    /// Stationary mass carried by each class.
    pub mixture: Vec<f64>,
}

impl ErgodicDecomposition {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

/// Splits the chain into the closed classes of `supp(pi)` and the transient
/// remainder.
pub fn ergodic_decomposition(p: &SparseMatrix, pi: &ProbabilityVector) -> Result<ErgodicDecomposition> {
    let n = p.nrows();
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pi.len(),
        });
    }
    const LEAK_TOLERANCE: f64 = 1e-12;
    let support = pi.support();
    let mut in_support = vec![false; n];
    for &s in &support {
        in_support[s] = true;
    }
    for &s in &support {
        let (cols, vals) = p.row(s);
        let leak: f64 = cols
            .iter()
            .zip(vals)
            .filter(|(j, _)| !in_support[**j])
            .map(|(_, v)| v)
            .sum();
        if leak > LEAK_TOLERANCE {
            return Err(Error::InconsistentSupport { state: s, mass: leak });
        }
    }

    let restricted = p.principal_submatrix(&support);
    let local_components = strongly_connected_components(&restricted);
    let mut label = vec![0usize; support.len()];
    for (c, comp) in local_components.iter().enumerate() {
        for &s in comp {
            label[s] = c;
        }
    }
    for (c, comp) in local_components.iter().enumerate() {
        for &s in comp {
            let (cols, vals) = restricted.row(s);
            let leak: f64 = cols
                .iter()
                .zip(vals)
                .filter(|(j, _)| label[**j] != c)
                .map(|(_, v)| v)
                .sum();
            if leak > LEAK_TOLERANCE {
                return Err(Error::InconsistentSupport {
                    state: support[s],
                    mass: leak,
                });
            }
        }
    }

    let mut classes: Vec<Vec<usize>> = local_components
        .into_iter()
        .map(|comp| comp.into_iter().map(|s| support[s]).collect())
        .collect();
    classes.sort_by_key(|c: &Vec<usize>| c[0]);
    let transient: Vec<usize> = (0..n).filter(|&s| !in_support[s]).collect();
    let permutation = classes
        .iter()
        .flatten()
        .chain(transient.iter())
        .copied()
        .collect();
    let mixture = classes
        .iter()
        .map(|c| c.iter().map(|&s| pi[s]).sum())
        .collect();
    Ok(ErgodicDecomposition {
        classes,
        transient,
        permutation,
        mixture,
    })
}

/// Outcome of [`kolmogorov_cycle_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CycleVerdict {
    /// Every simple cycle up to this length balances.
    ReversibleUpToLength(usize),
    /// The lexicographically first unbalanced cycle.
    Violation {
        cycle: Vec<usize>,
        forward: f64,
        reverse: f64,
    },
}

impl CycleVerdict {
    pub fn is_reversible(&self) -> bool {
        matches!(self, CycleVerdict::ReversibleUpToLength(_))
    }
}

const CYCLE_RTOL: f64 = 1e-10;

/// Compares forward and reverse transition products on every simple cycle of
/// length `3..=max_cycle_length` in the symmetrized support graph.
///
/// Exhaustive enumeration is exponential; a pass is only a certificate up to
/// the requested length.
pub fn kolmogorov_cycle_check(p: &SparseMatrix, max_cycle_length: usize) -> CycleVerdict {
    let n = p.nrows();
    let adjacency: Vec<Vec<usize>> = {
        let sym = crate::sparse::symmetrized_pattern(p);
        (0..n)
            .map(|i| sym.row(i).iter().copied().filter(|&j| j != i).collect())
            .collect()
    };

    let product = |cycle: &[usize], reverse: bool| -> f64 {
        let k = cycle.len();
        (0..k)
            .map(|t| {
                let (a, b) = (cycle[t], cycle[(t + 1) % k]);
                if reverse {
                    p.get(b, a)
                } else {
                    p.get(a, b)
                }
            })
            .product()
    };

    let mut path = Vec::with_capacity(max_cycle_length);
    let mut on_path = vec![false; n];
    // Iterative DFS: stack of positions into adjacency lists.
    for start in 0..n {
        path.clear();
        path.push(start);
        on_path[start] = true;
        let mut cursor = vec![0usize];
        while let Some(pos) = cursor.last_mut() {
            let v = *path.last().expect("path is non-empty");
            let neighbors = &adjacency[v];
            if *pos >= neighbors.len() {
                cursor.pop();
                on_path[v] = false;
                path.pop();
                continue;
            }
            let w = neighbors[*pos];
            *pos += 1;
            if w == start && path.len() >= 3 {
                let forward = product(&path, false);
                let reverse = product(&path, true);
                let scale = forward.abs().max(reverse.abs());
                if (forward - reverse).abs() > CYCLE_RTOL * scale {
                    for &s in &path {
                        on_path[s] = false;
                    }
                    return CycleVerdict::Violation {
                        cycle: path.clone(),
                        forward,
                        reverse,
                    };
                }
                continue;
            }
            if w > start && !on_path[w] && path.len() < max_cycle_length {
                path.push(w);
                on_path[w] = true;
                cursor.push(0);
            }
        }
    }
    CycleVerdict::ReversibleUpToLength(max_cycle_length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{row_normalize, SparseStochasticMatrix};

    fn fig1_t() -> SparseMatrix {
        SparseMatrix::from_dense(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.0, 0.5],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn fig1_t_tilde() -> SparseMatrix {
        SparseMatrix::from_dense(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn r_eps(n: usize, eps: f64) -> SparseMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| eps / n as f64 + if i == j { 1.0 - eps } else { 0.0 })
                    .collect()
            })
            .collect();
        SparseMatrix::from_dense(&rows).unwrap()
    }

    #[test]
    fn scc_examples() {
        assert_eq!(strongly_connected_components(&fig1_t()), vec![vec![0, 1, 2, 3]]);
        assert_eq!(
            strongly_connected_components(&fig1_t_tilde()),
            vec![vec![0], vec![1], vec![2, 3]]
        );
        let blocks = SparseMatrix::from_dense(&[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.1, 0.9],
            vec![0.0, 0.0, 0.9, 0.1],
        ])
        .unwrap();
        assert_eq!(
            strongly_connected_components(&blocks),
            vec![vec![0, 1], vec![2, 3]]
        );
    }

    #[test]
    fn scc_order_is_reverse_topological() {
        // 0 -> 1 -> 2, 2 is absorbing: sinks come first.
        let chain = SparseMatrix::from_dense(&[
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(
            strongly_connected_components(&chain),
            vec![vec![2], vec![1], vec![0]]
        );
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&fig1_t()));
        assert!(!is_irreducible(&fig1_t_tilde()));
        assert!(!is_irreducible(&SparseMatrix::identity(3)));
    }

    #[test]
    fn stationary_of_r_eps_is_uniform() {
        for &eps in &[1.0, 0.5, 0.01, 1e-6] {
            for method in [StationaryMethod::Direct, StationaryMethod::PowerIteration] {
                let opts = StationarySolveOptions {
                    method,
                    ..Default::default()
                };
                let pi = stationary_distribution(&r_eps(4, eps), &opts).unwrap();
                assert!(pi.iter().all(|v| (v - 0.25).abs() < 1e-14), "{eps} {method:?}");
            }
        }
    }

    #[test]
    fn stationary_of_fig1() {
        let expected = [0.2, 0.2, 0.4, 0.2];
        for method in [StationaryMethod::Direct, StationaryMethod::PowerIteration] {
            let opts = StationarySolveOptions {
                method,
                ..Default::default()
            };
            // Cycles of length 3 and 2 through state 3 make T aperiodic.
            let pi = stationary_distribution(&fig1_t(), &opts).unwrap();
            for (a, b) in pi.iter().zip(expected) {
                assert!((a - b).abs() < 1e-12, "{method:?}: {:?}", pi.as_slice());
            }
        }
    }

    #[test]
    fn power_iteration_handles_periodic_chain() {
        let flip = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let opts = StationarySolveOptions {
            method: StationaryMethod::PowerIteration,
            initial_distribution: Some(ProbabilityVector::new(vec![0.9, 0.1]).unwrap()),
            ..Default::default()
        };
        let pi = stationary_distribution(&flip, &opts).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn reducible_chain_zero_set_is_transient() {
        // States 0,1 closed; 2 closed; 3,4 transient.
        let p = SparseMatrix::from_dense(&[
            vec![0.3, 0.7, 0.0, 0.0, 0.0],
            vec![0.6, 0.4, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.2, 0.0, 0.3, 0.1, 0.4],
            vec![0.0, 0.0, 0.5, 0.5, 0.0],
        ])
        .unwrap();
        for method in [StationaryMethod::Direct, StationaryMethod::PowerIteration] {
            let opts = StationarySolveOptions {
                method,
                max_iterations: Some(10_000),
                ..Default::default()
            };
            let pi = stationary_distribution(&p, &opts).unwrap();
            assert_eq!(pi.support(), vec![0, 1, 2], "{method:?}");
            let d = ergodic_decomposition(&p, &pi).unwrap();
            assert_eq!(d.classes, vec![vec![0, 1], vec![2]]);
            assert_eq!(d.transient, vec![3, 4]);
            assert_eq!(d.permutation, vec![0, 1, 2, 3, 4]);
            assert!((d.mixture.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_matches_power_iteration_mixture() {
        let p = SparseMatrix::from_dense(&[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let pi0 = ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let direct = stationary_distribution(
            &p,
            &StationarySolveOptions {
                initial_distribution: Some(pi0.clone()),
                ..Default::default()
            },
        )
        .unwrap();
        let power = stationary_distribution(
            &p,
            &StationarySolveOptions {
                initial_distribution: Some(pi0),
                method: StationaryMethod::PowerIteration,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in direct.iter().zip(power.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        // From state 2: absorbed in {0,1} w.p. 0.3/0.7, in {3} w.p. 0.4/0.7.
        let mass01 = 0.3 + 0.3 * 0.3 / 0.7;
        assert!((direct[0] + direct[1] - mass01).abs() < 1e-14);
    }

    #[test]
    fn decomposition_of_fig1_t_tilde() {
        let pi = ProbabilityVector::new(vec![0.25, 0.25, 1.0 / 3.0, 1.0 / 6.0]).unwrap();
        let d = ergodic_decomposition(&fig1_t_tilde(), &pi).unwrap();
        assert_eq!(d.num_classes(), 3);
        assert_eq!(d.classes, vec![vec![0], vec![1], vec![2, 3]]);
        assert!(d.transient.is_empty());
    }

    #[test]
    fn decomposition_rejects_leaky_support() {
        let p = SparseMatrix::from_dense(&[vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        let pi = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            ergodic_decomposition(&p, &pi),
            Err(Error::InconsistentSupport { state: 0, .. })
        ));
        let pi = ProbabilityVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            ergodic_decomposition(&p, &pi),
            Err(Error::InconsistentSupport { state: 0, .. })
        ));
    }

    #[test]
    fn kolmogorov_examples() {
        let sym = SparseMatrix::from_dense(&[
            vec![0.2, 0.3, 0.5],
            vec![0.3, 0.4, 0.3],
            vec![0.5, 0.3, 0.2],
        ])
        .unwrap();
        assert!(kolmogorov_cycle_check(&sym, 3).is_reversible());

        match kolmogorov_cycle_check(&fig1_t(), 3) {
            CycleVerdict::Violation {
                cycle,
                forward,
                reverse,
            } => {
                assert_eq!(cycle, vec![0, 1, 2]);
                assert_eq!(forward, 0.5);
                assert_eq!(reverse, 0.0);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn kolmogorov_detects_nonreversible_dense_chain() {
        let p = row_normalize(
            &SparseMatrix::from_dense(&[
                vec![1.0, 2.0, 1.0],
                vec![1.0, 1.0, 3.0],
                vec![2.0, 1.0, 1.0],
            ])
            .unwrap(),
        )
        .unwrap();
        assert!(!kolmogorov_cycle_check(&p, 3).is_reversible());
        let id = SparseStochasticMatrix::identity(3);
        assert!(kolmogorov_cycle_check(&id, 3).is_reversible());
    }
}
