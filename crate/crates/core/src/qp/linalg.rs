//! Envelope (skyline) Cholesky with reverse Cuthill-McKee ordering for the
//! `n x n` normal matrices `A H^{-1} A^T` that share the pattern of `M`.

use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering of a symmetric adjacency structure.
/// Returns `order` with `order[new] = old`.
pub(crate) fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency
        .iter()
        .enumerate()
        .map(|(i, nb)| nb.iter().filter(|&&j| j != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(adjacency, &degree, seed);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v]
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Last vertex of a BFS level structure, repeated while eccentricity grows.
fn pseudo_peripheral(adjacency: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut root = seed;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (depth, last_level) = bfs_levels(adjacency, root);
        if depth <= best_depth && root != seed {
            break;
        }
        best_depth = depth;
        let candidate = *last_level
            .iter()
            .min_by_key(|&&v| (degree[v], v))
            .expect("non-empty level");
        if candidate == root {
            break;
        }
        root = candidate;
    }
    root
}

fn bfs_levels(adjacency: &[Vec<usize>], root: usize) -> (usize, Vec<usize>) {
    let mut level = vec![usize::MAX; adjacency.len()];
    level[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &w in &adjacency[v] {
                if level[w] == usize::MAX {
                    level[w] = depth + 1;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        frontier = next;
        depth += 1;
    }
}

/// Lower-triangular envelope storage: row `r` (in permuted order) holds
/// columns `first[r]..=r` contiguously.
#[derive(Debug, Clone)]
pub(crate) struct EnvelopeCholesky {
    /// `position[old] = new`.
    position: Vec<usize>,
    order: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
    /// Diagonal pivots replaced because they were numerically zero.
    pub(crate) replaced_pivots: usize,
}

/// Replacement for numerically zero pivots; it zeroes the matching solution
/// component, which yields a particular solution of consistent singular
/// systems.
const HUGE_PIVOT: f64 = 1e64;

impl EnvelopeCholesky {
    pub(crate) fn new(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let order = reverse_cuthill_mckee(adjacency);
        let mut position = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old, nb) in adjacency.iter().enumerate() {
            let r = position[old];
            for &w in nb {
                let c = position[w];
                let (hi, lo) = if r >= c { (r, c) } else { (c, r) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for r in 0..n {
            offset.push(offset[r] + (r - first[r] + 1));
        }
        let data = vec![0.0; offset[n]];
        EnvelopeCholesky {
            position,
            order,
            first,
            offset,
            data,
            replaced_pivots: 0,
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.first.len()
    }

    pub(crate) fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
        self.replaced_pivots = 0;
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`) in original
    /// numbering. Off-diagonal entries must be added once per unordered pair.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = (self.position[i], self.position[j]);
        let (r, c) = if a >= b { (a, b) } else { (b, a) };
        debug_assert!(c >= self.first[r], "entry outside envelope");
        self.data[self.offset[r] + c - self.first[r]] += v;
    }

    /// Adds `v` to every diagonal entry.
    pub(crate) fn shift_diagonal(&mut self, v: f64) {
        for r in 0..self.n() {
            self.data[self.offset[r + 1] - 1] += v;
        }
    }

    /// In-place factorization `L L^T`. A pivot at or below `relative_floor`
    /// times its original diagonal entry is replaced by a huge value.
    pub(crate) fn factor(&mut self, relative_floor: f64) {
        let n = self.n();
        self.replaced_pivots = 0;
        for r in 0..n {
            let fr = self.first[r];
            let row_start = self.offset[r];
            for c in fr..r {
                let fc = self.first[c];
                let k0 = fr.max(fc);
                let (head, tail) = self.data.split_at_mut(row_start);
                let lc = &head[self.offset[c] + (k0 - fc)..self.offset[c] + (c - fc)];
                let lr = &tail[k0 - fr..c - fr];
                let dot: f64 = lr.iter().zip(lc).map(|(a, b)| a * b).sum();
                let diag_c = head[self.offset[c + 1] - 1];
                tail[c - fr] = (tail[c - fr] - dot) / diag_c;
            }
            let row = &mut self.data[row_start..self.offset[r + 1]];
            let (off, diag) = row.split_at_mut(r - fr);
            let d = diag[0] - off.iter().map(|v| v * v).sum::<f64>();
            diag[0] = if d > relative_floor * diag[0].abs() && d > 0.0 {
                d.sqrt()
            } else {
                self.replaced_pivots += 1;
                HUGE_PIVOT
            };
        }
    }

    /// Solves `L L^T x = b` (original numbering).
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y: Vec<f64> = self.order.iter().map(|&old| b[old]).collect();
        for r in 0..n {
            let fr = self.first[r];
            let row = &self.data[self.offset[r]..self.offset[r + 1]];
            let dot: f64 = row[..r - fr].iter().zip(&y[fr..r]).map(|(a, b)| a * b).sum();
            y[r] = (y[r] - dot) / row[r - fr];
        }
        for r in (0..n).rev() {
            let fr = self.first[r];
            let row = &self.data[self.offset[r]..self.offset[r + 1]];
            y[r] /= row[r - fr];
            let xr = y[r];
            for (k, &l) in row[..r - fr].iter().enumerate() {
                y[fr + k] -= l * xr;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.order.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    #[cfg(test)]
    pub(crate) fn envelope_size(&self) -> usize {
        self.data.len()
    }
}
