use std::collections::VecDeque;

use super::CsrMatrix;

/// Reverse Cuthill–McKee ordering of the symmetrized sparsity pattern of `a`.
///
/// Returns `perm` with `perm[new] = old`. Every connected component is
/// started from a pseudo-peripheral node; ties are broken by degree, then by
/// index, so the ordering is deterministic.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    for &seed in &by_degree {
        if placed[seed] {
            continue;
        }
        let start = pseudo_peripheral(&adj, &degree, seed);
        let mut queue = VecDeque::from([start]);
        placed[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !placed[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// `(lower, upper)` bandwidths: the largest `i - j` and `j - i` over nonzeros.
pub fn bandwidth(a: &CsrMatrix) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for i in 0..a.nrows() {
        for (j, _) in a.row(i) {
            if j < i {
                lo = lo.max(i - j);
            } else {
                hi = hi.max(j - i);
            }
        }
    }
    (lo, hi)
}

fn symmetric_adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if j != i && j < n {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Breadth-first level structure rooted at `root`.
fn levels(adj: &[Vec<usize>], root: usize, mark: &mut [usize], stamp: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![root]];
    mark[root] = stamp;
    loop {
        let mut next = Vec::new();
        for &v in out.last().unwrap() {
            for &w in &adj[v] {
                if mark[w] != stamp {
                    mark[w] = stamp;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return out;
        }
        out.push(next);
    }
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut mark = vec![usize::MAX; adj.len()];
    let mut root = seed;
    let mut stamp = 0;
    let mut depth = levels(adj, root, &mut mark, stamp).len();
    loop {
        stamp += 1;
        let lv = levels(adj, root, &mut mark, stamp);
        let last = lv.last().unwrap();
        let candidate = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        stamp += 1;
        let cand_depth = levels(adj, candidate, &mut mark, stamp).len();
        if cand_depth > depth {
            root = candidate;
            depth = cand_depth;
        } else {
            return root;
        }
    }
}
