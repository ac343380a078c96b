//! Optimal transport on finite spaces.
//!
//! The transportation problem is solved by a primal network simplex on
//! spanning-tree bases with Bland's rule. Every solve returns an optimal plan
//! together with dual potentials whose objective matches the primal value.

pub mod flow;
pub mod lp;
pub mod polytope;

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{sublevel_set, FiniteMetricSpace, PairSet};
use crate::scalar::{eq_tol, lt_tol, Scalar};

pub use flow::{feasible_coupling_on, CouplingOutcome, HallViolation};
use lp::{maximize, LpOutcome};
use polytope::DifferenceSystem;

/// Default cap on the number of points for vertex enumeration.
pub const VERTEX_GUARD: usize = 8;
/// Cap for the boxed dual polytope, whose vertex count grows much faster.
pub const BOXED_GUARD: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector<S> {
    mass: Vec<S>,
}

impl<S: Scalar> ProbVector<S> {
    pub fn new(mass: Vec<S>, tol: f64) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for (i, m) in mass.iter().enumerate() {
            if m.sign_tol(tol) == Ordering::Less {
                return Err(Error::InvalidDistribution(format!("negative mass {m} at {i}")));
            }
        }
        let total: S = mass.iter().cloned().sum();
        if !eq_tol(&total, &S::one(), tol) {
            return Err(Error::InvalidDistribution(format!("total mass {total} != 1")));
        }
        Ok(ProbVector { mass })
    }

    pub fn dirac(n: usize, x: usize) -> Self {
        let mut mass = vec![S::zero(); n];
        mass[x] = S::one();
        ProbVector { mass }
    }

    pub fn uniform(n: usize) -> Self {
        let w = S::one() / S::from_usize(n);
        ProbVector { mass: vec![w; n] }
    }

    pub fn mass(&self) -> &[S] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> S {
        self.mass.iter().cloned().sum()
    }

    /// `sum_j f_j mass_j`.
    pub fn integrate(&self, f: &[S]) -> S {
        self.mass.iter().zip(f).map(|(m, v)| m.clone() * v.clone()).sum()
    }

    pub fn to_f64(&self) -> ProbVector<f64> {
        ProbVector { mass: self.mass.iter().map(|m| m.to_f64()).collect() }
    }
}

/// A transport plan and its marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling<S> {
    plan: Vec<Vec<S>>,
    mu: Vec<S>,
    nu: Vec<S>,
}

impl<S: Scalar> Coupling<S> {
    pub fn from_plan(plan: Vec<Vec<S>>) -> Self {
        let n = plan.len();
        let m = plan.first().map_or(0, |r| r.len());
        let mu = plan.iter().map(|r| r.iter().cloned().sum()).collect();
        let nu = (0..m).map(|j| (0..n).map(|i| plan[i][j].clone()).sum()).collect();
        Coupling { plan, mu, nu }
    }

    pub fn product(mu: &ProbVector<S>, nu: &ProbVector<S>) -> Self {
        let plan = mu
            .mass()
            .iter()
            .map(|a| nu.mass().iter().map(|b| a.clone() * b.clone()).collect())
            .collect();
        Self::from_plan(plan)
    }

    pub fn plan(&self) -> &[Vec<S>] {
        &self.plan
    }

    pub fn mu(&self) -> &[S] {
        &self.mu
    }

    pub fn nu(&self) -> &[S] {
        &self.nu
    }

    pub fn cost(&self, cost: &[Vec<S>]) -> S {
        self.plan
            .iter()
            .zip(cost)
            .flat_map(|(pr, cr)| pr.iter().zip(cr).map(|(p, c)| p.clone() * c.clone()))
            .sum()
    }

    /// Entries with nonzero mass.
    pub fn support(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, r) in self.plan.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                if v.sign_tol(tol) == Ordering::Greater {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_supported_on(&self, y: &PairSet, tol: f64) -> bool {
        self.support(tol).into_iter().all(|(i, j)| y.contains(i, j))
    }
}

/// Potentials `f, g` with `f_i + g_j <= cost_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPotentials<S> {
    pub f: Vec<S>,
    pub g: Vec<S>,
    /// `mu(f) + nu(g)` when marginals are attached.
    pub objective: Option<S>,
}

impl<S: Scalar> DualPotentials<S> {
    pub fn is_feasible(&self, cost: &[Vec<S>], tol: f64) -> bool {
        self.f.iter().enumerate().all(|(i, fi)| {
            self.g
                .iter()
                .enumerate()
                .all(|(j, gj)| (cost[i][j].clone() - fi.clone() - gj.clone()).sign_tol(tol) != Ordering::Less)
        })
    }

    pub fn evaluate(&self, mu: &ProbVector<S>, nu: &ProbVector<S>) -> S {
        mu.integrate(&self.f) + nu.integrate(&self.g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult<S> {
    pub value: S,
    pub plan: Coupling<S>,
    pub duals: DualPotentials<S>,
    /// Number of simplex pivots.
    pub pivots: usize,
}

fn check_same_mass<S: Scalar>(mu: &ProbVector<S>, nu: &ProbVector<S>, tol: f64) -> Result<()> {
    let (a, b) = (mu.total(), nu.total());
    if !eq_tol(&a, &b, tol) {
        return Err(Error::InfeasibleMarginals { mu: a.to_string(), nu: b.to_string() });
    }
    Ok(())
}

/// Spanning-tree basis of the bipartite graph on `n` rows and `m` columns.
struct TreeBasis {
    n: usize,
    m: usize,
    cells: Vec<(usize, usize)>,
}

impl TreeBasis {
    /// Node ids: rows `0..n`, columns `n..n+m`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.n + j, k));
            adj[self.n + j].push((i, k));
        }
        adj
    }

    /// Potentials with `v_{m-1} = 0`.
    fn potentials<S: Scalar>(&self, cost: &[Vec<S>]) -> (Vec<S>, Vec<S>) {
        let adj = self.adjacency();
        let mut pot: Vec<Option<S>> = vec![None; self.n + self.m];
        let root = self.n + self.m - 1;
        pot[root] = Some(S::zero());
        let mut queue = VecDeque::from([root]);
        while let Some(a) = queue.pop_front() {
            let pa = pot[a].clone().expect("visited");
            for &(b, k) in &adj[a] {
                if pot[b].is_none() {
                    let (i, j) = self.cells[k];
                    pot[b] = Some(cost[i][j].clone() - pa.clone());
                    queue.push_back(b);
                }
            }
        }
        let pot: Vec<S> = pot.into_iter().map(|p| p.expect("basis spans all nodes")).collect();
        (pot[..self.n].to_vec(), pot[self.n..].to_vec())
    }

    /// Basis cells on the tree path from row `i` to column `j`, in order.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let target = self.n + j;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.n + self.m];
        let mut seen = vec![false; self.n + self.m];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        while let Some(a) = queue.pop_front() {
            if a == target {
                break;
            }
            for &(b, k) in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    prev[b] = Some((a, k));
                    queue.push_back(b);
                }
            }
        }
        let mut cells = Vec::new();
        let mut v = target;
        while let Some((a, k)) = prev[v] {
            cells.push(k);
            v = a;
        }
        cells.reverse();
        cells
    }
}

/// Minimizes `sum cost_ij pi_ij` over couplings of `mu` and `nu`.
pub fn solve_transport<S: Scalar>(
    mu: &ProbVector<S>,
    nu: &ProbVector<S>,
    cost: &[Vec<S>],
    tol: f64,
) -> Result<TransportResult<S>> {
    check_same_mass(mu, nu, tol)?;
    let n = mu.len();
    let m = nu.len();
    if cost.len() != n || cost.iter().any(|r| r.len() != m) {
        return Err(Error::ShapeMismatch(format!("cost must be {n}x{m}")));
    }
    if cost.iter().flatten().any(|c| c.sign_tol(tol) == Ordering::Less) {
        return Err(Error::InvalidInput("cost entries must be non-negative".into()));
    }

    // northwest corner start; zero supplies stay in the graph
    let mut flow = vec![vec![S::zero(); m]; n];
    let mut cells = Vec::with_capacity(n + m - 1);
    let mut supply: Vec<S> = mu.mass().to_vec();
    let mut demand: Vec<S> = nu.mass().to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let x = if supply[i] <= demand[j] { supply[i].clone() } else { demand[j].clone() };
        flow[i][j] = x.clone();
        cells.push((i, j));
        supply[i] = supply[i].clone() - x.clone();
        demand[j] = demand[j].clone() - x;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if (supply[i].is_zero() && i < n - 1) || j == m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    let mut basis = TreeBasis { n, m, cells };
    // reduced costs carry rounding error proportional to the largest cost
    let scale = cost.iter().flatten().map(|c| c.to_f64().abs()).fold(1.0, f64::max);
    let reduced_tol = tol * scale;

    let mut pivots = 0usize;
    let (f, g) = loop {
        let (u, v) = basis.potentials(cost);
        // Bland: first cell in row-major order with negative reduced cost
        let mut entering = None;
        'scan: for (a, row) in cost.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                let reduced = c.clone() - u[a].clone() - v[b].clone();
                if lt_tol(&reduced, &S::zero(), reduced_tol) {
                    entering = Some((a, b));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else { break (u, v) };
        let path = basis.path(ei, ej);
        // cells at odd positions along the path (0-based even index) lose flow
        let mut leave: Option<usize> = None;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 != 0 {
                continue;
            }
            let (a, b) = basis.cells[k];
            leave = match leave {
                None => Some(k),
                Some(l) => {
                    let (la, lb) = basis.cells[l];
                    match flow[a][b].partial_cmp(&flow[la][lb]).expect("comparable") {
                        Ordering::Less => Some(k),
                        Ordering::Equal if a * m + b < la * m + lb => Some(k),
                        _ => Some(l),
                    }
                }
            };
        }
        let l = leave.expect("cycle has a decreasing cell");
        let (la, lb) = basis.cells[l];
        let theta = flow[la][lb].clone();
        for (pos, &k) in path.iter().enumerate() {
            let (a, b) = basis.cells[k];
            flow[a][b] = if pos % 2 == 0 {
                flow[a][b].clone() - theta.clone()
            } else {
                flow[a][b].clone() + theta.clone()
            };
        }
        flow[ei][ej] = theta;
        flow[la][lb] = S::zero();
        basis.cells[l] = (ei, ej);
        pivots += 1;
    };

    let plan = Coupling::from_plan(flow);
    let value = plan.cost(cost);
    let mut duals = DualPotentials { f, g, objective: None };
    duals.objective = Some(duals.evaluate(mu, nu));
    Ok(TransportResult { value, plan, duals, pivots })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WassersteinOrder {
    Finite(f64),
    Infinite,
}

impl std::fmt::Display for WassersteinOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WassersteinOrder::Finite(p) => write!(f, "{p}"),
            WassersteinOrder::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for WassersteinOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "oo" => Ok(WassersteinOrder::Infinite),
            other => {
                let p: f64 = other.parse().map_err(|_| Error::Parse(format!("bad order '{other}'")))?;
                if !(p >= 1.0) || !p.is_finite() {
                    return Err(Error::InvalidInput(format!("order must be >= 1, got {p}")));
                }
                Ok(WassersteinOrder::Finite(p))
            }
        }
    }
}

fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("order must be a finite p >= 1, got {p}")));
    }
    Ok(())
}

/// Solves the transport problem for cost `d^p`; `value` is `W_p^p`.
pub fn wasserstein_p_cost<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    mu: &ProbVector<S>,
    nu: &ProbVector<S>,
    p: f64,
) -> Result<TransportResult<S>> {
    check_order(p)?;
    check_dims(space, mu, nu)?;
    solve_transport(mu, nu, &space.cost_matrix(p), space.tol())
}

/// `W_p(mu, nu)`.
pub fn wasserstein_p<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    mu: &ProbVector<S>,
    nu: &ProbVector<S>,
    p: f64,
) -> Result<f64> {
    let res = wasserstein_p_cost(space, mu, nu, p)?;
    Ok(res.value.to_f64().max(0.0).powf(1.0 / p))
}

fn check_dims<S: Scalar>(space: &FiniteMetricSpace<S>, mu: &ProbVector<S>, nu: &ProbVector<S>) -> Result<()> {
    for len in [mu.len(), nu.len()] {
        if len != space.n() {
            return Err(Error::DimensionMismatch { expected: space.n(), got: len });
        }
    }
    Ok(())
}

/// `W_1` as `max mu(f) - nu(f)` over 1-Lipschitz `f`, solved as its own LP.
///
/// With `f_{n-1} = 0`, the substitution `y_i = f_i + d(i, n-1)` makes the
/// origin feasible and all constraints `y_i - y_j <= d(i,j) + d(i,n-1) - d(j,n-1)`
/// have non-negative right-hand sides.
pub fn kantorovich_w1<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    mu: &ProbVector<S>,
    nu: &ProbVector<S>,
) -> Result<(S, Vec<S>)> {
    check_dims(space, mu, nu)?;
    check_same_mass(mu, nu, space.tol())?;
    let n = space.n();
    if n == 1 {
        return Ok((S::zero(), vec![S::zero()]));
    }
    let last = n - 1;
    let anchor_dist = |i: usize| space.d(i, last).clone();
    let c: Vec<S> = (0..last).map(|i| mu.mass()[i].clone() - nu.mass()[i].clone()).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..last {
        for j in 0..last {
            if i == j {
                continue;
            }
            let mut row = vec![S::zero(); last];
            row[i] = S::one();
            row[j] = -S::one();
            a.push(row);
            b.push(space.d(i, j).clone() + anchor_dist(i) - anchor_dist(j));
        }
        let mut row = vec![S::zero(); last];
        row[i] = S::one();
        a.push(row);
        b.push(anchor_dist(i) + anchor_dist(i));
    }
    let LpOutcome::Optimal { x, .. } = maximize(&c, &a, &b, space.tol()) else {
        unreachable!("the Lipschitz polytope is bounded once f_(n-1) is fixed")
    };
    let mut witness: Vec<S> = x.iter().enumerate().map(|(i, y)| y.clone() - anchor_dist(i)).collect();
    witness.push(S::zero());
    let value = mu.integrate(&witness) - nu.integrate(&witness);
    Ok((value, witness))
}

/// Result of the bottleneck search.
#[derive(Debug, Clone, PartialEq)]
pub struct WinfResult<S> {
    pub r: S,
    pub plan: Coupling<S>,
    /// Infeasibility certificate at the next smaller realized distance.
    pub below: Option<HallViolation<S>>,
}

/// The least realized distance `r` admitting a coupling supported on `d <= r`.
pub fn wasserstein_inf<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    mu: &ProbVector<S>,
    nu: &ProbVector<S>,
) -> Result<WinfResult<S>> {
    check_dims(space, mu, nu)?;
    check_same_mass(mu, nu, space.tol())?;
    let tol = space.tol();
    let levels = space.realized_distances();
    let feasible_at = |k: usize| feasible_coupling_on(mu, nu, &sublevel_set(space, &levels[k]), tol);
    // invariant: levels[hi] feasible; levels[lo - 1] infeasible or lo == 0
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    let mut best = match feasible_at(hi)? {
        CouplingOutcome::Feasible(c) => c,
        CouplingOutcome::Infeasible(_) => {
            return Err(Error::InvalidInput("no coupling at the diameter; marginals are inconsistent".into()))
        }
    };
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible_at(mid)? {
            CouplingOutcome::Feasible(c) => {
                hi = mid;
                best = c;
            }
            CouplingOutcome::Infeasible(_) => lo = mid + 1,
        }
    }
    let below = if hi == 0 {
        None
    } else {
        match feasible_at(hi - 1)? {
            CouplingOutcome::Infeasible(v) => Some(v),
            CouplingOutcome::Feasible(_) => unreachable!("binary search invariant"),
        }
    };
    Ok(WinfResult { r: levels[hi].clone(), plan: best, below })
}

/// Vertices of `{f : |f_i - f_j| <= d(i,j), f_{n-1} = 0}`.
pub fn enumerate_lipschitz_vertices<S: Scalar>(space: &FiniteMetricSpace<S>, guard: usize) -> Result<Vec<Vec<S>>> {
    let n = space.n();
    if n > guard {
        return Err(Error::SizeGuardExceeded { what: "Lipschitz polytope", size: n, limit: guard });
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let mut sys = DifferenceSystem::new(n, n - 1);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sys.push(i, j, space.d(i, j).clone());
            }
        }
    }
    sys.vertices(vec![S::zero(); n], space.tol())
}

/// Vertices of the dual polyhedron `{(f, g) : f_i + g_j <= cost_ij}` with the
/// normalization `g_{n-1} = 0`.
///
/// Used by the universal transport checks: the objectives there are convex,
/// invariant under `(f - t, g + t)` and non-increasing along every recession
/// direction, so their supremum is attained at one of these vertices.
pub fn enumerate_dual_vertices<S: Scalar>(
    cost: &[Vec<S>],
    guard: usize,
    tol: f64,
) -> Result<Vec<DualPotentials<S>>> {
    let n = cost.len();
    if n > guard {
        return Err(Error::SizeGuardExceeded { what: "dual transport polyhedron", size: n, limit: guard });
    }
    // nodes: f_0..f_{n-1}, h_0..h_{n-1} with h = -g; f_i - h_j <= c_ij
    let mut sys = DifferenceSystem::new(2 * n, 2 * n - 1);
    for (i, row) in cost.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            sys.push(i, n + j, c.clone());
        }
    }
    let verts = sys.vertices(vec![S::zero(); 2 * n], tol)?;
    Ok(verts
        .into_iter()
        .map(|z| DualPotentials {
            f: z[..n].to_vec(),
            g: z[n..].iter().map(|h| -h.clone()).collect(),
            objective: None,
        })
        .collect())
}

/// Vertices of the boxed dual polytope
/// `{f_i + g_j <= d(i,j)^p, -2C <= f_i, g_j <= 2C}` with `C = max d^p`.
pub fn enumerate_boxed_dual_vertices<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    p: f64,
    guard: usize,
) -> Result<Vec<DualPotentials<S>>> {
    check_order(p)?;
    let n = space.n();
    if n > guard {
        return Err(Error::SizeGuardExceeded { what: "boxed dual polytope", size: n, limit: guard });
    }
    let cost = space.cost_matrix(p);
    let c = cost.iter().flatten().cloned().fold(S::zero(), |a, b| if b > a { b } else { a });
    let bound = c.clone() + c;
    // nodes: f (0..n), h = -g (n..2n), ground 2n pinned at zero
    let ground = 2 * n;
    let mut sys = DifferenceSystem::new(2 * n + 1, ground);
    for (i, row) in cost.iter().enumerate() {
        for (j, cij) in row.iter().enumerate() {
            sys.push(i, n + j, cij.clone());
        }
    }
    for v in 0..2 * n {
        sys.push(v, ground, bound.clone());
        sys.push(ground, v, bound.clone());
    }
    let verts = sys.vertices(vec![S::zero(); 2 * n + 1], space.tol())?;
    Ok(verts
        .into_iter()
        .map(|z| DualPotentials {
            f: z[..n].to_vec(),
            g: z[n..2 * n].iter().map(|h| -h.clone()).collect(),
            objective: None,
        })
        .collect())
}
