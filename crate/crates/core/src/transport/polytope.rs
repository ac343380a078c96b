//! Vertex enumeration for polyhedra cut out by difference constraints
//! `z_u - z_v <= w`, with one anchor coordinate pinned to zero.
//!
//! A feasible point is a vertex exactly when its tight constraints connect all
//! nodes. Edges leave a vertex by shifting a node set `K` (anchor excluded)
//! while the tight constraints inside `K` and inside its complement stay tight,
//! which requires both sides to be connected in the tight graph. The search
//! walks the vertex-edge graph breadth first and skips unbounded rays.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct DifferenceSystem<S> {
    nodes: usize,
    anchor: usize,
    /// `(u, v, w)` encodes `z_u - z_v <= w`.
    arcs: Vec<(usize, usize, S)>,
}

impl<S: Scalar> DifferenceSystem<S> {
    pub fn new(nodes: usize, anchor: usize) -> Self {
        assert!(nodes <= 32, "difference systems are limited to 32 nodes");
        DifferenceSystem { nodes, anchor, arcs: Vec::new() }
    }

    pub fn push(&mut self, u: usize, v: usize, w: S) {
        self.arcs.push((u, v, w));
    }

    fn slack(&self, z: &[S], k: usize) -> S {
        let (u, v, w) = &self.arcs[k];
        w.clone() - (z[*u].clone() - z[*v].clone())
    }

    fn is_feasible(&self, z: &[S], tol: f64) -> bool {
        (0..self.arcs.len()).all(|k| self.slack(z, k).sign_tol(tol) != Ordering::Less)
    }

    /// Undirected adjacency bitmasks of the tight graph, plus the tight arcs.
    fn tight(&self, z: &[S], tol: f64) -> (Vec<u32>, Vec<bool>) {
        let mut adj = vec![0u32; self.nodes];
        let mut tight = vec![false; self.arcs.len()];
        for (k, (u, v, _)) in self.arcs.iter().enumerate() {
            if self.slack(z, k).sign_tol(tol) == Ordering::Equal {
                tight[k] = true;
                adj[*u] |= 1 << v;
                adj[*v] |= 1 << u;
            }
        }
        (adj, tight)
    }

    /// Largest step `t` such that `z + sign * t * 1_K` stays feasible, or
    /// `None` if the move is a ray. `Some(0)` means the move is blocked.
    fn step(&self, z: &[S], k_mask: u32, sign: i32, tight: &[bool]) -> Option<S> {
        let mut best: Option<S> = None;
        for (k, (u, v, _)) in self.arcs.iter().enumerate() {
            let in_u = k_mask >> u & 1 == 1;
            let in_v = k_mask >> v & 1 == 1;
            if in_u == in_v {
                continue;
            }
            // moving K by +t changes z_u - z_v by +t when u in K
            let delta = if in_u { sign } else { -sign };
            if delta < 0 {
                continue;
            }
            if tight[k] {
                return Some(S::zero());
            }
            let s = self.slack(z, k);
            best = Some(match best {
                Some(b) if b <= s => b,
                _ => s,
            });
        }
        best
    }

    fn shifted(z: &[S], k_mask: u32, sign: i32, t: &S) -> Vec<S> {
        z.iter()
            .enumerate()
            .map(|(i, zi)| {
                if k_mask >> i & 1 == 1 {
                    if sign > 0 {
                        zi.clone() + t.clone()
                    } else {
                        zi.clone() - t.clone()
                    }
                } else {
                    zi.clone()
                }
            })
            .collect()
    }

    /// Moves a feasible point to a vertex by merging tight components.
    pub fn push_to_vertex(&self, start: Vec<S>, tol: f64) -> Result<Vec<S>> {
        if start.len() != self.nodes || !start[self.anchor].is_zero() || !self.is_feasible(&start, tol) {
            return Err(Error::InvalidInput("starting point is not feasible".into()));
        }
        let mut z = start;
        loop {
            let (adj, tight) = self.tight(&z, tol);
            let comp = component(&adj, self.anchor, full_mask(self.nodes));
            if comp == full_mask(self.nodes) {
                return Ok(z);
            }
            let outside = full_mask(self.nodes) & !comp;
            let first = outside.trailing_zeros() as usize;
            let k_mask = component(&adj, first, outside);
            let mut moved = false;
            for sign in [1, -1] {
                if let Some(t) = self.step(&z, k_mask, sign, &tight) {
                    z = Self::shifted(&z, k_mask, sign, &t);
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Err(Error::InvalidInput("polyhedron contains a line".into()));
            }
        }
    }

    /// All vertices reachable from `start` through bounded edges, which is all
    /// vertices of a pointed polyhedron.
    pub fn vertices(&self, start: Vec<S>, tol: f64) -> Result<Vec<Vec<S>>> {
        let first = self.push_to_vertex(start, tol)?;
        let key = |z: &[S]| z.iter().map(|v| v.key(tol)).collect::<Vec<_>>();
        let mut seen = BTreeSet::new();
        seen.insert(key(&first));
        let mut out = vec![first.clone()];
        let mut queue = VecDeque::from([first]);
        let all = full_mask(self.nodes);
        let free = all & !(1u32 << self.anchor);
        while let Some(z) = queue.pop_front() {
            let (adj, tight) = self.tight(&z, tol);
            for k_mask in self.edge_sets(&adj, &tight, free) {
                for sign in [1, -1] {
                    let Some(t) = self.step(&z, k_mask, sign, &tight) else { continue };
                    if t.is_zero() {
                        continue;
                    }
                    let next = Self::shifted(&z, k_mask, sign, &t);
                    if seen.insert(key(&next)) {
                        out.push(next.clone());
                        queue.push_back(next);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Candidate node sets `K` whose shift traces an edge.
    fn edge_sets(&self, adj: &[u32], tight: &[bool], free: u32) -> Vec<u32> {
        let all = full_mask(self.nodes);
        let tight_count = tight.iter().filter(|t| **t).count();
        let mut sets = Vec::new();
        if tight_count + 1 == self.nodes {
            // nondegenerate: the tight graph is a spanning tree, drop one edge
            for (k, (u, v, _)) in self.arcs.iter().enumerate() {
                if !tight[k] {
                    continue;
                }
                let mut cut = adj.to_vec();
                cut[*u] &= !(1 << v);
                cut[*v] &= !(1 << u);
                let side = component(&cut, self.anchor, all);
                sets.push(all & !side);
            }
            return sets;
        }
        let mut k_mask = free;
        while k_mask != 0 {
            let rest = all & !k_mask;
            if is_connected(adj, k_mask) && is_connected(adj, rest) {
                sets.push(k_mask);
            }
            k_mask = (k_mask - 1) & free;
        }
        sets
    }
}

fn full_mask(nodes: usize) -> u32 {
    if nodes == 32 {
        u32::MAX
    } else {
        (1u32 << nodes) - 1
    }
}

/// Connected component of `start` inside the node set `within`.
fn component(adj: &[u32], start: usize, within: u32) -> u32 {
    let mut reach = 1u32 << start;
    let mut frontier = reach;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[v] & within & !reach;
        reach |= new;
        frontier |= new;
    }
    reach
}

fn is_connected(adj: &[u32], set: u32) -> bool {
    if set == 0 {
        return false;
    }
    component(adj, set.trailing_zeros() as usize, set) == set
}
