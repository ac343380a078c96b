//! Actions on finite spaces, encoded by magic unitaries.
//!
//! Convention: `rho(e_j) = sum_i e_i (x) u_ij`, so `rho(f)(x) = sum_j f_j u_xj`.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::algebra::{c, reduce_against, Element, C64};
use super::quantum_group::{QuantumGroup, VerificationReport};
use super::state::StateFunctional;
use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::transport::ProbVector;

#[derive(Debug, Clone)]
pub struct CoAction {
    pub name: String,
    group: Arc<QuantumGroup>,
    space: FiniteMetricSpace<f64>,
    u: Vec<Vec<Element>>,
}

impl CoAction {
    pub fn new(
        name: impl Into<String>,
        group: Arc<QuantumGroup>,
        space: FiniteMetricSpace<f64>,
        u: Vec<Vec<Element>>,
    ) -> Result<Self> {
        let n = space.n();
        if u.len() != n || u.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!("magic unitary must be {n}x{n}")));
        }
        for row in &u {
            for e in row {
                group.algebra().check_shape(e)?;
            }
        }
        Ok(CoAction { name: name.into(), group, space, u })
    }

    pub fn group(&self) -> &QuantumGroup {
        &self.group
    }

    pub fn group_arc(&self) -> Arc<QuantumGroup> {
        self.group.clone()
    }

    pub fn space(&self) -> &FiniteMetricSpace<f64> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn u(&self, i: usize, j: usize) -> &Element {
        &self.u[i][j]
    }

    pub fn entries(&self) -> &[Vec<Element>] {
        &self.u
    }

    /// The same magic unitary over another metric on the same points.
    pub fn with_space(&self, space: FiniteMetricSpace<f64>) -> Result<Self> {
        Self::new(self.name.clone(), self.group.clone(), space, self.u.clone())
    }

    /// `sum_j f_j u_xj`.
    pub fn rho_at(&self, x: usize, f: &[f64]) -> Element {
        let alg = self.group.algebra();
        f.iter()
            .zip(&self.u[x])
            .fold(alg.zero(), |acc, (fj, uj)| if *fj == 0.0 { acc } else { acc.add(&uj.scale_real(*fj)) })
    }

    /// Largest deviation from `kappa(u_ij) = u_ji`.
    pub fn kappa_transpose_residual(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(self.group.kappa(&self.u[i][j]).sub(&self.u[j][i]).max_abs());
            }
        }
        worst
    }
}

/// Checks the magic-unitary and coaction axioms, and optionally faithfulness.
pub fn verify_coaction(action: &CoAction, tol: f64, check_faithful: bool) -> Result<VerificationReport> {
    let qg = action.group();
    let alg = qg.algebra();
    let n = action.n();
    let mut rep = VerificationReport::new(tol);
    let one = alg.one();

    let mut proj = 0.0f64;
    let mut orth = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let p = action.u(i, j);
            proj = proj.max(p.mul(p).sub(p).max_abs()).max(p.sub(&p.adjoint()).max_abs());
            for k in 0..n {
                if k != j {
                    orth = orth.max(p.mul(action.u(i, k)).max_abs());
                }
                if k != i {
                    orth = orth.max(p.mul(action.u(k, j)).max_abs());
                }
            }
        }
    }
    rep.record("projections", proj);
    rep.record("row_column_orthogonality", orth);

    let mut rows = 0.0f64;
    let mut cols = 0.0f64;
    for i in 0..n {
        let r = (0..n).fold(alg.zero(), |acc, j| acc.add(action.u(i, j)));
        let cc = (0..n).fold(alg.zero(), |acc, j| acc.add(action.u(j, i)));
        rows = rows.max(r.sub(&one).max_abs());
        cols = cols.max(cc.sub(&one).max_abs());
    }
    rep.record("row_sums", rows);
    rep.record("column_sums", cols);

    let mut coassoc = 0.0f64;
    let mut counit = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let lhs = qg.delta_coords(action.u(i, j));
            let mut rhs = DVector::<C64>::zeros(lhs.len());
            for k in 0..n {
                rhs += qg.kron(action.u(i, k), action.u(k, j));
            }
            coassoc = coassoc.max((lhs - rhs).camax());
            let target = if i == j { 1.0 } else { 0.0 };
            counit = counit.max((qg.epsilon(action.u(i, j)) - c(target, 0.0)).norm());
        }
    }
    rep.record("coaction_coassociativity", coassoc);
    rep.record("coaction_counit", counit);

    if check_faithful {
        let gen = generated_dimension(action, tol);
        rep.record("faithfulness_defect", (alg.dim() - gen) as f64);
    }
    Ok(rep)
}

/// Dimension of the unital algebra generated by the entries of `u`.
pub fn generated_dimension(action: &CoAction, tol: f64) -> usize {
    let alg = action.group().algebra();
    let gens: Vec<DVector<C64>> = action.entries().iter().flatten().map(|e| alg.coords(e)).collect();
    let mut basis: Vec<DVector<C64>> = Vec::new();
    let mut frontier: Vec<DVector<C64>> = Vec::new();
    let tol = tol.max(1e-10);
    for v in std::iter::once(alg.unit_coords()).chain(gens.iter().cloned()) {
        if let Some(b) = reduce_against(&basis, &v, tol) {
            basis.push(b);
            frontier.push(v);
        }
    }
    while !frontier.is_empty() && basis.len() < alg.dim() {
        let mut next = Vec::new();
        for f in &frontier {
            let fe = alg.element(f);
            for g in &gens {
                let prod = alg.coords(&fe.mul(&alg.element(g)));
                if let Some(b) = reduce_against(&basis, &prod, tol) {
                    basis.push(b);
                    next.push(prod);
                }
            }
        }
        frontier = next;
    }
    basis.len()
}

/// `x <| psi`, the measure `j -> psi(u_xj)`.
pub fn act_on_point(action: &CoAction, x: usize, psi: &StateFunctional) -> Result<ProbVector<f64>> {
    let alg = action.group().algebra();
    let mass: Vec<f64> = (0..action.n())
        .map(|j| {
            let v = psi.eval_re(alg, action.u(x, j));
            if v < 0.0 && v > -1e-9 {
                0.0
            } else {
                v
            }
        })
        .collect();
    ProbVector::new(mass, 1e-8)
}

/// `psi |> f`, the function `x -> sum_j f_j psi(u_xj)`.
pub fn act_on_function(action: &CoAction, psi: &StateFunctional, f: &[f64]) -> Result<Vec<f64>> {
    let n = action.n();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let alg = action.group().algebra();
    Ok((0..n).map(|x| psi.eval_re(alg, &action.rho_at(x, f))).collect())
}

/// `a_{x;S} = sum_{j in S} u_xj`.
pub fn a_element(action: &CoAction, x: usize, subset: &[usize]) -> Element {
    let alg = action.group().algebra();
    subset.iter().fold(alg.zero(), |acc, &j| acc.add(action.u(x, j)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbits {
    pub classes: Vec<Vec<usize>>,
}

/// Orbits `O_x = {j : u_xj != 0}`, checked to form a partition.
pub fn orbits(action: &CoAction, tol: f64) -> Result<Orbits> {
    let n = action.n();
    let support: Vec<Vec<bool>> = (0..n)
        .map(|x| (0..n).map(|j| !action.u(x, j).is_zero(tol)).collect())
        .collect();
    for x in 0..n {
        if !support[x][x] {
            return Err(Error::NotAPartition { x, y: x });
        }
        for y in 0..n {
            if support[x][y] != support[y][x] {
                return Err(Error::NotAPartition { x, y });
            }
            if support[x][y] && support[x] != support[y] {
                return Err(Error::NotAPartition { x, y });
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        if classes.iter().any(|cl| cl.contains(&x)) {
            continue;
        }
        classes.push((0..n).filter(|&j| support[x][j]).collect());
    }
    Ok(Orbits { classes })
}
