//! Finite-dimensional compact quantum groups with explicit structure maps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::algebra::{c, BlockAlgebra, Element, C64};
use crate::error::{Error, Result};

/// Coefficients below this magnitude are treated as structural zeros when
/// iterating over the nonzero pattern of a structure map.
const SPARSITY: f64 = 1e-14;

/// `(A, Delta, epsilon, kappa)` over the matrix-unit basis of `A`.
///
/// `delta` is `dim^2 x dim`; row `alpha * dim + beta` of column `gamma` is the
/// coefficient of `e_alpha (x) e_beta` in `Delta(e_gamma)`.
#[derive(Debug, Clone)]
pub struct QuantumGroup {
    name: String,
    algebra: BlockAlgebra,
    delta: DMatrix<C64>,
    epsilon: DVector<C64>,
    kappa: DMatrix<C64>,
    tensor: BlockAlgebra,
    perm: Vec<usize>,
    /// Nonzero pattern of each column of `delta`.
    sparse: Vec<Vec<(usize, usize, C64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResidual {
    pub axiom: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tol: f64,
    pub residuals: Vec<AxiomResidual>,
}

impl VerificationReport {
    pub fn new(tol: f64) -> Self {
        VerificationReport { tol, residuals: Vec::new() }
    }

    pub fn record(&mut self, axiom: &str, residual: f64) {
        self.residuals.push(AxiomResidual { axiom: axiom.to_string(), residual });
    }

    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.residual <= self.tol)
    }

    pub fn worst(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn get(&self, axiom: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.axiom == axiom).map(|r| r.residual)
    }

    pub fn failures(&self) -> Vec<&AxiomResidual> {
        self.residuals.iter().filter(|r| r.residual > self.tol).collect()
    }
}

fn max_abs(v: impl IntoIterator<Item = C64>) -> f64 {
    v.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl QuantumGroup {
    /// Builds the structure without checking any axiom beyond shapes.
    pub fn from_parts(
        name: impl Into<String>,
        algebra: BlockAlgebra,
        delta: DMatrix<C64>,
        epsilon: DVector<C64>,
        kappa: DMatrix<C64>,
    ) -> Result<Self> {
        let d = algebra.dim();
        if delta.nrows() != d * d || delta.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "comultiplication must be {}x{d}, got {}x{}",
                d * d,
                delta.nrows(),
                delta.ncols()
            )));
        }
        if epsilon.len() != d {
            return Err(Error::ShapeMismatch(format!("counit must have length {d}, got {}", epsilon.len())));
        }
        if kappa.nrows() != d || kappa.ncols() != d {
            return Err(Error::ShapeMismatch(format!("antipode must be {d}x{d}")));
        }
        let (tensor, perm) = algebra.tensor(&algebra);
        let sparse = (0..d)
            .map(|g| {
                let mut nz = Vec::new();
                for row in 0..d * d {
                    let v = delta[(row, g)];
                    if v.norm() > SPARSITY {
                        nz.push((row / d, row % d, v));
                    }
                }
                nz
            })
            .collect();
        Ok(QuantumGroup { name: name.into(), algebra, delta, epsilon, kappa, tensor, perm, sparse })
    }

    /// Builds and verifies at `tol`, rejecting non-Kac antipodes separately.
    pub fn new_verified(
        name: impl Into<String>,
        algebra: BlockAlgebra,
        delta: DMatrix<C64>,
        epsilon: DVector<C64>,
        kappa: DMatrix<C64>,
        tol: f64,
    ) -> Result<Self> {
        let qg = Self::from_parts(name, algebra, delta, epsilon, kappa)?;
        let report = verify_quantum_group(&qg, tol)?;
        let kac = ["kac_involutive", "kac_star"]
            .iter()
            .filter_map(|a| report.get(a))
            .fold(0.0, f64::max);
        if kac > tol {
            return Err(Error::KacViolation { residual: kac });
        }
        if !report.passed() {
            let f = report.failures();
            return Err(Error::InvalidInput(format!(
                "quantum group axioms fail: {}",
                f.iter().map(|r| format!("{} ({:.2e})", r.axiom, r.residual)).collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(qg)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn delta_matrix(&self) -> &DMatrix<C64> {
        &self.delta
    }

    pub fn epsilon_vector(&self) -> &DVector<C64> {
        &self.epsilon
    }

    pub fn kappa_matrix(&self) -> &DMatrix<C64> {
        &self.kappa
    }

    /// `A (x) A` as a block algebra.
    pub fn tensor_algebra(&self) -> &BlockAlgebra {
        &self.tensor
    }

    /// Nonzero entries `(alpha, beta, coefficient)` of `Delta(e_gamma)`.
    pub fn delta_terms(&self, gamma: usize) -> &[(usize, usize, C64)] {
        &self.sparse[gamma]
    }

    /// Coordinates of `Delta(x)` in Kronecker order.
    pub fn delta_coords(&self, x: &Element) -> DVector<C64> {
        &self.delta * self.algebra.coords(x)
    }

    /// `Delta(x)` as an element of the tensor algebra.
    pub fn delta(&self, x: &Element) -> Element {
        self.kron_to_tensor(&self.delta_coords(x))
    }

    pub fn kron_to_tensor(&self, v: &DVector<C64>) -> Element {
        let mut w = DVector::zeros(self.tensor.dim());
        for (i, val) in v.iter().enumerate() {
            w[self.perm[i]] = *val;
        }
        self.tensor.element(&w)
    }

    /// Kronecker coordinates of `x (x) y`.
    pub fn kron(&self, x: &Element, y: &Element) -> DVector<C64> {
        let a = self.algebra.coords(x);
        let b = self.algebra.coords(y);
        let d = self.dim();
        DVector::from_fn(d * d, |i, _| a[i / d] * b[i % d])
    }

    pub fn epsilon(&self, x: &Element) -> C64 {
        self.epsilon.dot(&self.algebra.coords(x))
    }

    pub fn kappa(&self, x: &Element) -> Element {
        self.algebra.element(&(&self.kappa * self.algebra.coords(x)))
    }

    /// The block carrying the counit, if `epsilon` is supported on a single
    /// 1x1 block.
    pub fn counit_block(&self) -> Option<usize> {
        let support: Vec<usize> = (0..self.algebra.num_blocks())
            .filter(|&k| self.algebra.block_range(k).any(|i| self.epsilon[i].norm() > 1e-9))
            .collect();
        match support.as_slice() {
            [k] if self.algebra.sizes()[*k] == 1 => Some(*k),
            _ => None,
        }
    }

    /// The block permutation induced by the antipode (an anti-automorphism
    /// maps each simple summand onto a simple summand).
    pub fn kappa_block_map(&self, tol: f64) -> Vec<Vec<usize>> {
        let alg = &self.algebra;
        (0..alg.num_blocks())
            .map(|k| {
                let mut targets = Vec::new();
                for l in 0..alg.num_blocks() {
                    let hit = alg
                        .block_range(k)
                        .any(|col| alg.block_range(l).any(|row| self.kappa[(row, col)].norm() > tol));
                    if hit {
                        targets.push(l);
                    }
                }
                targets
            })
            .collect()
    }
}

/// Product of two matrix units, if nonzero.
pub fn mul_basis(alg: &BlockAlgebra, x: usize, y: usize) -> Option<usize> {
    let (k, a, b) = alg.locate(x);
    let (l, cc, d) = alg.locate(y);
    (k == l && b == cc).then(|| alg.index(k, a, d))
}

/// Checks every Hopf *-algebra axiom and reports the largest violation of each.
///
/// Residuals are maximum absolute coordinate differences.
pub fn verify_quantum_group(qg: &QuantumGroup, tol: f64) -> Result<VerificationReport> {
    let alg = qg.algebra();
    let d = alg.dim();
    let mut rep = VerificationReport::new(tol);
    let unit = alg.unit_coords();
    let basis: Vec<Element> = (0..d).map(|i| alg.basis_element(i)).collect();
    let delta_elems: Vec<Element> = (0..d).map(|i| qg.kron_to_tensor(&qg.delta.column(i).into_owned())).collect();

    // comultiplication: unital, multiplicative, *-preserving
    let d1 = &qg.delta * &unit;
    let kron11 = DVector::from_fn(d * d, |i, _| unit[i / d] * unit[i % d]);
    rep.record("delta_unital", max_abs((d1 - kron11).iter().copied()));

    let mut mult = 0.0f64;
    for x in 0..d {
        for y in 0..d {
            let lhs = match mul_basis(alg, x, y) {
                Some(z) => delta_elems[z].clone(),
                None => qg.tensor.zero(),
            };
            let rhs = delta_elems[x].mul(&delta_elems[y]);
            mult = mult.max(lhs.sub(&rhs).max_abs());
        }
    }
    rep.record("delta_multiplicative", mult);

    let mut star = 0.0f64;
    for x in 0..d {
        let (k, a, b) = alg.locate(x);
        let xs = alg.index(k, b, a);
        star = star.max(delta_elems[xs].sub(&delta_elems[x].adjoint()).max_abs());
    }
    rep.record("delta_star", star);

    // coassociativity, column by column over the sparse pattern
    let mut coassoc = 0.0f64;
    for g in 0..d {
        let mut left = vec![C64::default(); d * d * d];
        let mut right = vec![C64::default(); d * d * d];
        for &(a, b, v) in qg.delta_terms(g) {
            for &(p, q, w) in qg.delta_terms(a) {
                left[(p * d + q) * d + b] += v * w;
            }
            for &(p, q, w) in qg.delta_terms(b) {
                right[(a * d + p) * d + q] += v * w;
            }
        }
        coassoc = coassoc.max(max_abs(left.iter().zip(&right).map(|(l, r)| l - r)));
    }
    rep.record("coassociativity", coassoc);

    // counit
    let mut cl = 0.0f64;
    let mut cr = 0.0f64;
    for g in 0..d {
        let mut left = DVector::<C64>::zeros(d);
        let mut right = DVector::<C64>::zeros(d);
        for &(a, b, v) in qg.delta_terms(g) {
            left[b] += qg.epsilon[a] * v;
            right[a] += qg.epsilon[b] * v;
        }
        left[g] -= c(1.0, 0.0);
        right[g] -= c(1.0, 0.0);
        cl = cl.max(left.camax());
        cr = cr.max(right.camax());
    }
    rep.record("counit_left", cl);
    rep.record("counit_right", cr);
    let mut cm = (qg.epsilon.dot(&unit) - c(1.0, 0.0)).norm();
    for x in 0..d {
        for y in 0..d {
            let lhs = mul_basis(alg, x, y).map_or(C64::default(), |z| qg.epsilon[z]);
            cm = cm.max((lhs - qg.epsilon[x] * qg.epsilon[y]).norm());
        }
        let (k, a, b) = alg.locate(x);
        cm = cm.max((qg.epsilon[alg.index(k, b, a)] - qg.epsilon[x].conj()).norm());
    }
    rep.record("counit_character", cm);

    // antipode
    let kappa_elems: Vec<Element> = (0..d).map(|i| alg.element(&qg.kappa.column(i).into_owned())).collect();
    let mut al = 0.0f64;
    let mut ar = 0.0f64;
    for g in 0..d {
        let mut left = alg.zero();
        let mut right = alg.zero();
        for &(a, b, v) in qg.delta_terms(g) {
            left = left.add(&kappa_elems[a].mul(&basis[b]).scale(v));
            right = right.add(&basis[a].mul(&kappa_elems[b]).scale(v));
        }
        let target = alg.one().scale(qg.epsilon[g]);
        al = al.max(left.sub(&target).max_abs());
        ar = ar.max(right.sub(&target).max_abs());
    }
    rep.record("antipode_left", al);
    rep.record("antipode_right", ar);

    // Kac type: involutive, *-compatible, anti-multiplicative
    let k2 = &qg.kappa * &qg.kappa - DMatrix::<C64>::identity(d, d);
    rep.record("kac_involutive", k2.camax());
    let mut ks = 0.0f64;
    let mut km = 0.0f64;
    for x in 0..d {
        let (k, a, b) = alg.locate(x);
        let xs = alg.index(k, b, a);
        ks = ks.max(kappa_elems[xs].sub(&kappa_elems[x].adjoint()).max_abs());
        for y in 0..d {
            let lhs = mul_basis(alg, x, y).map_or_else(|| alg.zero(), |z| kappa_elems[z].clone());
            let rhs = kappa_elems[y].mul(&kappa_elems[x]);
            km = km.max(lhs.sub(&rhs).max_abs());
        }
    }
    rep.record("kac_star", ks);
    rep.record("antipode_antimultiplicative", km);

    // cancellation: T1(a (x) b) = Delta(a)(1 (x) b) inverted by
    // a (x) b -> sum a1 (x) kappa(a2) b; T2 likewise on the other leg
    let (t1, t2) = cancellation_residuals(qg, &kappa_elems);
    rep.record("cancellation_left", t1);
    rep.record("cancellation_right", t2);

    Ok(rep)
}

/// Dense `dim^2`-vector of a tensor written in Kronecker order.
type Kron = Vec<C64>;

/// Largest entry of `g(f(e)) - e` over the Kronecker basis `e`.
fn inverse_residual(d: usize, f: &dyn Fn(usize, usize, &mut Kron), g: &dyn Fn(usize, usize, &mut Kron)) -> f64 {
    let mut worst = 0.0f64;
    let mut part = vec![C64::default(); d * d];
    for idx in 0..d * d {
        let mut first = vec![C64::default(); d * d];
        f(idx / d, idx % d, &mut first);
        let mut back = vec![C64::default(); d * d];
        for (i, v) in first.iter().enumerate() {
            if v.norm() > SPARSITY {
                part.iter_mut().for_each(|p| *p = C64::default());
                g(i / d, i % d, &mut part);
                for (o, p) in back.iter_mut().zip(&part) {
                    *o += v * p;
                }
            }
        }
        back[idx] -= c(1.0, 0.0);
        worst = worst.max(max_abs(back));
    }
    worst
}

fn cancellation_residuals(qg: &QuantumGroup, kappa_elems: &[Element]) -> (f64, f64) {
    let alg = qg.algebra();
    let d = alg.dim();
    let kcoords: Vec<DVector<C64>> = kappa_elems.iter().map(|e| alg.coords(e)).collect();
    let nonzero = |x: &DVector<C64>| -> Vec<(usize, C64)> {
        x.iter().enumerate().filter(|(_, v)| v.norm() > SPARSITY).map(|(g, v)| (g, *v)).collect()
    };
    let kappa_terms: Vec<Vec<(usize, C64)>> = kcoords.iter().map(nonzero).collect();
    // T1(a (x) b) = Delta(a)(1 (x) b)
    let t1 = |a: usize, b: usize, out: &mut Kron| {
        for &(p, q, v) in qg.delta_terms(a) {
            if let Some(z) = mul_basis(alg, q, b) {
                out[p * d + z] += v;
            }
        }
    };
    // a (x) b -> sum a1 (x) kappa(a2) b
    let t1_inv = |a: usize, b: usize, out: &mut Kron| {
        for &(p, q, v) in qg.delta_terms(a) {
            for &(g, w) in &kappa_terms[q] {
                if let Some(z) = mul_basis(alg, g, b) {
                    out[p * d + z] += v * w;
                }
            }
        }
    };
    // T2(a (x) b) = (a (x) 1) Delta(b)
    let t2 = |a: usize, b: usize, out: &mut Kron| {
        for &(p, q, v) in qg.delta_terms(b) {
            if let Some(z) = mul_basis(alg, a, p) {
                out[z * d + q] += v;
            }
        }
    };
    // a (x) b -> sum a kappa(b1) (x) b2
    let t2_inv = |a: usize, b: usize, out: &mut Kron| {
        for &(p, q, v) in qg.delta_terms(b) {
            for &(g, w) in &kappa_terms[p] {
                if let Some(z) = mul_basis(alg, a, g) {
                    out[z * d + q] += v * w;
                }
            }
        }
    };
    let r1 = inverse_residual(d, &t1, &t1_inv).max(inverse_residual(d, &t1_inv, &t1));
    let r2 = inverse_residual(d, &t2, &t2_inv).max(inverse_residual(d, &t2_inv, &t2));
    (r1, r2)
}
