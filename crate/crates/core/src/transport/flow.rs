//! Max-flow feasibility of couplings supported on a pair set.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metric::PairSet;
use crate::scalar::{lt_tol, Scalar};

use super::{check_same_mass, Coupling, ProbVector};

/// A subset `S` with `nu(N(S)) < mu(S)`, where `N(S)` is the forward
/// neighbourhood of `S` in the pair set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallViolation<S> {
    pub subset: Vec<usize>,
    pub neighborhood: Vec<usize>,
    pub mu_of_subset: S,
    pub nu_of_neighborhood: S,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingOutcome<S> {
    Feasible(Coupling<S>),
    Infeasible(HallViolation<S>),
}

impl<S> CouplingOutcome<S> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, CouplingOutcome::Feasible(_))
    }
}

struct Arc<S> {
    to: usize,
    /// `None` is an uncapacitated arc.
    cap: Option<S>,
    flow: S,
    rev: usize,
}

struct Network<S> {
    adj: Vec<Vec<Arc<S>>>,
}

impl<S: Scalar> Network<S> {
    fn new(nodes: usize) -> Self {
        Network { adj: (0..nodes).map(|_| Vec::new()).collect() }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: Option<S>) {
        let rf = self.adj[to].len();
        let rt = self.adj[from].len();
        self.adj[from].push(Arc { to, cap, flow: S::zero(), rev: rf });
        self.adj[to].push(Arc { to: from, cap: Some(S::zero()), flow: S::zero(), rev: rt });
    }

    fn residual(arc: &Arc<S>) -> Option<S> {
        arc.cap.as_ref().map(|c| c.clone() - arc.flow.clone())
    }

    /// Nodes reachable from `s` through arcs with positive residual capacity.
    fn reachable(&self, s: usize, tol: f64) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for arc in &self.adj[v] {
                let open = match Self::residual(arc) {
                    None => true,
                    Some(r) => lt_tol(&S::zero(), &r, tol),
                };
                if open && !seen[arc.to] {
                    seen[arc.to] = true;
                    queue.push_back(arc.to);
                }
            }
        }
        seen
    }

    /// Edmonds-Karp. Returns the flow value.
    fn max_flow(&mut self, s: usize, t: usize, tol: f64) -> S {
        let mut total = S::zero();
        loop {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut found = false;
            while let Some(v) = queue.pop_front() {
                for (k, arc) in self.adj[v].iter().enumerate() {
                    if arc.to == s || prev[arc.to].is_some() {
                        continue;
                    }
                    let open = match Self::residual(arc) {
                        None => true,
                        Some(r) => lt_tol(&S::zero(), &r, tol),
                    };
                    if open {
                        prev[arc.to] = Some((v, k));
                        if arc.to == t {
                            found = true;
                            break;
                        }
                        queue.push_back(arc.to);
                    }
                }
                if found {
                    break;
                }
            }
            if !found {
                return total;
            }
            // bottleneck; the path always contains the capacitated source arc
            let mut bottleneck: Option<S> = None;
            let mut v = t;
            while let Some((u, k)) = prev[v] {
                if let Some(r) = Self::residual(&self.adj[u][k]) {
                    bottleneck = Some(match bottleneck {
                        None => r,
                        Some(b) if r < b => r,
                        Some(b) => b,
                    });
                }
                v = u;
            }
            let delta = bottleneck.expect("augmenting path has a capacitated arc");
            let mut v = t;
            while let Some((u, k)) = prev[v] {
                let rev = self.adj[u][k].rev;
                self.adj[u][k].flow = self.adj[u][k].flow.clone() + delta.clone();
                self.adj[v][rev].flow = self.adj[v][rev].flow.clone() - delta.clone();
                v = u;
            }
            total = total + delta;
        }
    }
}

/// Decides whether some `(mu, nu)`-coupling vanishes outside `y`.
///
/// On success the plan is read off the flow; otherwise the source side of a
/// minimum cut gives a subset violating the Hall inequality.
pub fn feasible_coupling_on<S: Scalar>(
    mu: &ProbVector<S>,
    nu: &ProbVector<S>,
    y: &PairSet,
    tol: f64,
) -> Result<CouplingOutcome<S>> {
    check_same_mass(mu, nu, tol)?;
    let n = mu.len();
    if nu.len() != n || y.n() != n {
        return Err(crate::error::Error::DimensionMismatch { expected: n, got: nu.len().max(y.n()) });
    }
    if y.len() == n * n {
        return Ok(CouplingOutcome::Feasible(Coupling::product(mu, nu)));
    }
    let source = 2 * n;
    let sink = 2 * n + 1;
    let mut net = Network::new(2 * n + 2);
    for i in 0..n {
        net.add_arc(source, i, Some(mu.mass()[i].clone()));
        net.add_arc(n + i, sink, Some(nu.mass()[i].clone()));
    }
    let mut arc_index = vec![usize::MAX; n * n];
    for (i, j) in y.pairs() {
        arc_index[i * n + j] = net.adj[i].len();
        net.add_arc(i, n + j, None);
    }
    let value = net.max_flow(source, sink, tol);
    let total = mu.total();
    if lt_tol(&value, &total, tol) {
        let seen = net.reachable(source, tol);
        let subset: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
        let neighborhood: Vec<usize> = (0..n).filter(|&j| seen[n + j]).collect();
        let mu_of_subset = subset.iter().map(|&i| mu.mass()[i].clone()).sum();
        let nu_of_neighborhood = neighborhood.iter().map(|&j| nu.mass()[j].clone()).sum();
        return Ok(CouplingOutcome::Infeasible(HallViolation {
            subset,
            neighborhood,
            mu_of_subset,
            nu_of_neighborhood,
        }));
    }
    let mut plan = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let k = arc_index[i * n + j];
            if k != usize::MAX {
                plan[i][j] = net.adj[i][k].flow.clone();
            }
        }
    }
    Ok(CouplingOutcome::Feasible(Coupling::from_plan(plan)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn pv(v: &[(i64, i64)]) -> ProbVector<Rational> {
        ProbVector::new(v.iter().map(|&(a, b)| Rational::from_ratio(a, b)).collect(), 0.0).unwrap()
    }

    #[test]
    fn anti_diagonal_coupling() {
        let m = pv(&[(1, 2), (1, 2)]);
        let y = PairSet::from_pairs(2, &[(0, 1), (1, 0)]).unwrap();
        match feasible_coupling_on(&m, &m, &y, 0.0).unwrap() {
            CouplingOutcome::Feasible(c) => {
                let half = Rational::from_ratio(1, 2);
                assert_eq!(c.plan()[0][1], half);
                assert_eq!(c.plan()[1][0], half);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagonal_support_with_distinct_marginals() {
        let mu = pv(&[(3, 4), (1, 4)]);
        let nu = pv(&[(1, 4), (3, 4)]);
        match feasible_coupling_on(&mu, &nu, &PairSet::diagonal(2), 0.0).unwrap() {
            CouplingOutcome::Infeasible(v) => {
                assert_eq!(v.subset, vec![0]);
                assert!(v.nu_of_neighborhood < v.mu_of_subset);
            }
            other => panic!("{other:?}"),
        }
    }
}
