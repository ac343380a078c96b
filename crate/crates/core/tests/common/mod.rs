//! Brute-force oracles and samplers shared by the integration tests.
#![allow(dead_code)]

use num_traits::{One, Zero};
use qiso_core::transport::ProbVector;
use qiso_core::Rational;
use rand::Rng;

pub fn ratio(a: i64, b: i64) -> Rational {
    Rational::new(a.into(), b.into())
}

/// Probability vectors of length `n` whose entries are multiples of `1/q` for
/// some `q` in `denominators`, without duplicates.
pub fn grid(n: usize, denominators: &[i64]) -> Vec<Vec<Rational>> {
    fn compositions(total: i64, parts: usize, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=total {
            prefix.push(k);
            compositions(total - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out: Vec<Vec<Rational>> = Vec::new();
    for &q in denominators {
        let mut comps = Vec::new();
        compositions(q, n, &mut Vec::new(), &mut comps);
        for c in comps {
            let v: Vec<Rational> = c.iter().map(|&k| ratio(k, q)).collect();
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

/// Random probability vector with small integer weights.
pub fn random_prob(rng: &mut impl Rng, n: usize) -> ProbVector<Rational> {
    loop {
        let w: Vec<i64> = (0..n).map(|_| rng.random_range(0..=6)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return ProbVector::new(w.iter().map(|&k| ratio(k, total)).collect(), 0.0).unwrap();
        }
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Every spanning tree of the complete bipartite graph `K_{n,n}`, as cell lists.
pub fn spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = 2 * n - 1;
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let mut parent: Vec<usize> = (0..2 * n).collect();
        let acyclic = pick.iter().all(|&c| {
            let (i, j) = cells[c];
            let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
            if a == b {
                false
            } else {
                parent[a] = b;
                true
            }
        });
        if acyclic {
            out.push(pick.iter().map(|&c| cells[c]).collect());
        }
        // next combination
        let m = cells.len();
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pick[i] != i + m - k {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// The basic solution of a spanning tree for integer supplies `a` and demands
/// `b`, if non-negative. Flattened row-major.
pub fn tree_flow(n: usize, tree: &[(usize, usize)], a: &[i64], b: &[i64]) -> Option<Vec<i64>> {
    let mut rem: Vec<i64> = a.iter().chain(b).copied().collect();
    let mut alive = vec![true; tree.len()];
    let mut flow = vec![0i64; n * n];
    for _ in 0..tree.len() {
        let mut degree = vec![0usize; 2 * n];
        for (k, &(i, j)) in tree.iter().enumerate() {
            if alive[k] {
                degree[i] += 1;
                degree[n + j] += 1;
            }
        }
        let (k, leaf) = tree
            .iter()
            .enumerate()
            .filter(|(k, _)| alive[*k])
            .find_map(|(k, &(i, j))| {
                if degree[i] == 1 {
                    Some((k, i))
                } else if degree[n + j] == 1 {
                    Some((k, n + j))
                } else {
                    None
                }
            })
            .expect("a forest has a leaf");
        let (i, j) = tree[k];
        let other = if leaf == i { n + j } else { i };
        let x = rem[leaf];
        if x < 0 {
            return None;
        }
        flow[i * n + j] = x;
        rem[leaf] = 0;
        rem[other] -= x;
        alive[k] = false;
    }
    rem.iter().all(|&r| r == 0).then_some(flow)
}

/// Vertices of the transportation polytope with integer margins.
pub fn transport_vertices(n: usize, trees: &[Vec<(usize, usize)>], a: &[i64], b: &[i64]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = Vec::new();
    for t in trees {
        if let Some(f) = tree_flow(n, t, a, b) {
            if !out.contains(&f) {
                out.push(f);
            }
        }
    }
    out
}

/// Whether the bipartite graph has a perfect matching, by trying every permutation.
pub fn matching_exists_exhaustive(adj: &[Vec<bool>]) -> bool {
    fn go(adj: &[Vec<bool>], i: usize, used: &mut Vec<bool>) -> bool {
        if i == adj.len() {
            return true;
        }
        for j in 0..adj.len() {
            if adj[i][j] && !used[j] {
                used[j] = true;
                if go(adj, i + 1, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    go(adj, 0, &mut vec![false; adj.len()])
}

/// Vertices of `{z : z_u - z_v <= w for (u, v, w) in arcs, z_anchor = 0}` by
/// trying every set of `nodes - 1` constraints as the active set.
pub fn active_set_vertices(nodes: usize, anchor: usize, arcs: &[(usize, usize, Rational)]) -> Vec<Vec<Rational>> {
    let free: Vec<usize> = (0..nodes).filter(|&v| v != anchor).collect();
    let k = free.len();
    let m = arcs.len();
    let mut out: Vec<Vec<Rational>> = Vec::new();
    if k == 0 {
        return vec![vec![Rational::zero(); nodes]];
    }
    let mut pick: Vec<usize> = (0..k).collect();
    if m < k {
        return out;
    }
    loop {
        // solve the k x k system
        let mut a: Vec<Vec<Rational>> = vec![vec![Rational::zero(); k + 1]; k];
        for (r, &c) in pick.iter().enumerate() {
            let (u, v, ref w) = arcs[c];
            if let Some(p) = free.iter().position(|&x| x == u) {
                a[r][p] += Rational::one();
            }
            if let Some(p) = free.iter().position(|&x| x == v) {
                a[r][p] -= Rational::one();
            }
            a[r][k] = w.clone();
        }
        if let Some(sol) = gauss(a, k) {
            let mut z = vec![Rational::zero(); nodes];
            for (p, &v) in free.iter().enumerate() {
                z[v] = sol[p].clone();
            }
            if arcs.iter().all(|(u, v, w)| &z[*u] - &z[*v] <= *w) && !out.contains(&z) {
                out.push(z);
            }
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pick[i] != i + m - k {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

fn gauss(mut a: Vec<Vec<Rational>>, k: usize) -> Option<Vec<Rational>> {
    for col in 0..k {
        let piv = (col..k).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for c in col..=k {
            a[col][c] = &a[col][c] / &p;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=k {
                    let delta = &f * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[k].clone()).collect())
}
