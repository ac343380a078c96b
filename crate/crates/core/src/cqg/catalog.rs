//! Built-in quantum groups and actions.
//!
//! Function algebras `C(G)` of permutation groups acting on their points,
//! group algebras of finite groups through their irreducible representations,
//! and the eight-dimensional Kac-Paljutkin quantum group, built from its
//! presentation by generators `x, y, z` (with `x, y` central group-likes and
//! `Delta(z) = J (z (x) z)` for the twist `J = (1(x)1 + 1(x)x + y(x)1 - y(x)x) / 2`).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::algebra::{c, BlockAlgebra, Element, C64};
use super::coaction::CoAction;
use super::quantum_group::QuantumGroup;
use crate::error::{Error, Result};
use crate::metric::{random_metric_space, validate_metric, FiniteMetricSpace, MetricModel};
use crate::scalar::{Rational, Scalar};

/// Tolerance used when admitting built-in structures.
pub const BUILD_TOL: f64 = 1e-10;

pub type Perm = Vec<usize>;

fn compose(g: &Perm, h: &Perm) -> Perm {
    h.iter().map(|&j| g[j]).collect()
}

fn inverse(g: &Perm) -> Perm {
    let mut inv = vec![0; g.len()];
    for (j, &i) in g.iter().enumerate() {
        inv[i] = j;
    }
    inv
}

fn is_permutation(g: &Perm, n: usize) -> bool {
    let mut seen = vec![false; n];
    g.len() == n && g.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// All elements of the group generated by `generators`, identity first.
pub fn group_closure(n: usize, generators: &[Perm]) -> Result<Vec<Perm>> {
    for g in generators {
        if !is_permutation(g, n) {
            return Err(Error::NotAGroup(format!("{g:?} is not a permutation of 0..{n}")));
        }
    }
    let id: Perm = (0..n).collect();
    let mut elems = vec![id.clone()];
    let mut seen = std::collections::HashSet::from([id]);
    let mut i = 0;
    while i < elems.len() {
        for g in generators {
            let h = compose(g, &elems[i]);
            if seen.insert(h.clone()) {
                elems.push(h);
            }
        }
        i += 1;
    }
    Ok(elems)
}

/// `C(G)` for a permutation group given by its element list (identity first).
///
/// The product is composition, `(gh)(j) = g(h(j))`, so that
/// `Delta(u_ij) = sum_k u_ik (x) u_kj` for `u_ij = 1{g : g(j) = i}`.
pub fn function_algebra(name: &str, elements: &[Perm]) -> Result<QuantumGroup> {
    let m = elements.len();
    let index: std::collections::HashMap<&Perm, usize> = elements.iter().enumerate().map(|(i, g)| (g, i)).collect();
    let alg = BlockAlgebra::new(vec![1; m])?;
    let mut delta = DMatrix::<C64>::zeros(m * m, m);
    let mut kappa = DMatrix::<C64>::zeros(m, m);
    let mut eps = DVector::<C64>::zeros(m);
    for (a, g) in elements.iter().enumerate() {
        for (b, h) in elements.iter().enumerate() {
            let gh = compose(g, h);
            let k = *index.get(&gh).ok_or_else(|| Error::NotAGroup("element list is not closed".into()))?;
            delta[(a * m + b, k)] = c(1.0, 0.0);
        }
        let inv = *index.get(&inverse(g)).ok_or_else(|| Error::NotAGroup("missing inverse".into()))?;
        kappa[(inv, a)] = c(1.0, 0.0);
        if g.iter().enumerate().all(|(j, &i)| i == j) {
            eps[a] = c(1.0, 0.0);
        }
    }
    QuantumGroup::new_verified(name, alg, delta, eps, kappa, BUILD_TOL)
}

/// `C(G)` acting on `space` through the permutation group generated by
/// `generators`. Returns the action and the group elements (identity first).
pub fn from_permutation_group(
    name: &str,
    space: FiniteMetricSpace<f64>,
    generators: &[Perm],
) -> Result<(CoAction, Vec<Perm>)> {
    let n = space.n();
    let elements = group_closure(n, generators)?;
    let qg = Arc::new(function_algebra(&format!("C({name})"), &elements)?);
    let alg = qg.algebra().clone();
    let mut u = vec![vec![alg.zero(); n]; n];
    for (a, g) in elements.iter().enumerate() {
        for j in 0..n {
            u[g[j]][j].blocks[a][(0, 0)] = c(1.0, 0.0);
        }
    }
    Ok((CoAction::new(format!("C({name}) on {n} points"), qg, space, u)?, elements))
}

/// A finite group given by its multiplication table (`table[g][h] = gh`) and
/// a complete list of pairwise inequivalent unitary irreducible
/// representations (`irreps[r][g]` is the matrix of `g`).
#[derive(Debug, Clone)]
pub struct GroupData {
    pub name: String,
    pub table: Vec<Vec<usize>>,
    pub irreps: Vec<Vec<DMatrix<C64>>>,
}

/// The group algebra of a finite group, `C*(G) = sum_r M_{d_r}`, together
/// with the images of the group elements.
#[derive(Debug, Clone)]
pub struct DualGroup {
    pub group: Arc<QuantumGroup>,
    pub elements: Vec<Element>,
    pub table: Vec<Vec<usize>>,
}

fn check_group_table(table: &[Vec<usize>]) -> Result<(usize, Vec<usize>)> {
    let m = table.len();
    if m == 0 || table.iter().any(|r| r.len() != m || r.iter().any(|&v| v >= m)) {
        return Err(Error::NotAGroup("multiplication table must be square with entries in range".into()));
    }
    let e = (0..m)
        .find(|&e| (0..m).all(|g| table[e][g] == g && table[g][e] == g))
        .ok_or_else(|| Error::NotAGroup("no identity element".into()))?;
    let mut inv = vec![0; m];
    for g in 0..m {
        inv[g] = (0..m)
            .find(|&h| table[g][h] == e && table[h][g] == e)
            .ok_or_else(|| Error::NotAGroup(format!("element {g} has no inverse")))?;
    }
    for a in 0..m {
        for b in 0..m {
            for cc in 0..m {
                if table[table[a][b]][cc] != table[a][table[b][cc]] {
                    return Err(Error::NotAGroup(format!("associativity fails at ({a},{b},{cc})")));
                }
            }
        }
    }
    Ok((e, inv))
}

pub fn dual_of_group(data: &GroupData) -> Result<DualGroup> {
    let (e, inv) = check_group_table(&data.table)?;
    let m = data.table.len();
    let mut sizes = Vec::new();
    for (r, rep) in data.irreps.iter().enumerate() {
        if rep.len() != m {
            return Err(Error::InconsistentIrreps(format!("representation {r} has {} matrices", rep.len())));
        }
        let d = rep[0].nrows();
        for (g, mat) in rep.iter().enumerate() {
            if mat.nrows() != d || mat.ncols() != d {
                return Err(Error::InconsistentIrreps(format!("representation {r} changes size at {g}")));
            }
            let unit = (mat * mat.adjoint() - DMatrix::<C64>::identity(d, d)).camax();
            if unit > 1e-9 {
                return Err(Error::InconsistentIrreps(format!("representation {r} is not unitary at {g}")));
            }
            for (h, other) in rep.iter().enumerate() {
                let res = (mat * other - &rep[data.table[g][h]]).camax();
                if res > 1e-9 {
                    return Err(Error::InconsistentIrreps(format!(
                        "representation {r} is not a homomorphism at ({g},{h})"
                    )));
                }
            }
        }
        sizes.push(d);
    }
    let alg = BlockAlgebra::new(sizes)?;
    if alg.dim() != m {
        return Err(Error::InconsistentIrreps(format!(
            "squared dimensions sum to {}, the group has order {m}",
            alg.dim()
        )));
    }
    let elements: Vec<Element> = (0..m)
        .map(|g| Element { blocks: data.irreps.iter().map(|rep| rep[g].clone()).collect() })
        .collect();
    let cols: Vec<DVector<C64>> = elements.iter().map(|x| alg.coords(x)).collect();
    let mmat = DMatrix::from_columns(&cols);
    let minv = mmat
        .try_inverse()
        .ok_or_else(|| Error::InconsistentIrreps("representations are reducible or equivalent".into()))?;
    let d = m;
    let mut delta = DMatrix::<C64>::zeros(d * d, d);
    let mut kappa = DMatrix::<C64>::zeros(d, d);
    let mut eps = DVector::<C64>::zeros(d);
    for alpha in 0..d {
        for g in 0..m {
            let w = minv[(g, alpha)];
            if w.norm() < 1e-15 {
                continue;
            }
            for a in 0..d {
                for b in 0..d {
                    delta[(a * d + b, alpha)] += w * cols[g][a] * cols[g][b];
                }
            }
            for a in 0..d {
                kappa[(a, alpha)] += w * cols[inv[g]][a];
            }
            eps[alpha] += w;
        }
    }
    let _ = e;
    let clean = |x: &mut C64| {
        if x.re.abs() < 1e-13 {
            x.re = 0.0;
        }
        if x.im.abs() < 1e-13 {
            x.im = 0.0;
        }
    };
    delta.iter_mut().for_each(clean);
    kappa.iter_mut().for_each(clean);
    eps.iter_mut().for_each(clean);
    let group = QuantumGroup::new_verified(format!("C*({})", data.name), alg, delta, eps, kappa, BUILD_TOL)?;
    Ok(DualGroup { group: Arc::new(group), elements, table: data.table.clone() })
}

fn root_of_unity(m: usize, k: i64) -> C64 {
    let t = 2.0 * PI * k as f64 / m as f64;
    c(t.cos(), t.sin())
}

fn scalar_mat(z: C64) -> DMatrix<C64> {
    DMatrix::from_element(1, 1, z)
}

/// The cyclic group `Z_m`, element `k` standing for `g^k`.
pub fn cyclic_group(m: usize) -> GroupData {
    let table = (0..m).map(|a| (0..m).map(|b| (a + b) % m).collect()).collect();
    let irreps = (0..m)
        .map(|k| (0..m).map(|g| scalar_mat(root_of_unity(m, (k * g) as i64))).collect())
        .collect();
    GroupData { name: format!("Z{m}"), table, irreps }
}

/// The dihedral group of order `2m` (`m >= 3`): element `k` is `r^k`,
/// element `m + k` is `s r^k`.
pub fn dihedral_group(m: usize) -> GroupData {
    let mul = |a: usize, b: usize| -> usize {
        let (sa, ka) = (a / m, a % m);
        let (sb, kb) = (b / m, b % m);
        // r^k s = s r^{-k}
        match (sa, sb) {
            (0, 0) => (ka + kb) % m,
            (0, 1) => m + (kb + m - ka) % m,
            (1, 0) => m + (ka + kb) % m,
            _ => (kb + m - ka) % m,
        }
    };
    let order = 2 * m;
    let table: Vec<Vec<usize>> = (0..order).map(|a| (0..order).map(|b| mul(a, b)).collect()).collect();
    let mut irreps: Vec<Vec<DMatrix<C64>>> = Vec::new();
    let one_dim = |r_val: f64, s_val: f64| -> Vec<DMatrix<C64>> {
        (0..order)
            .map(|g| {
                let (s, k) = (g / m, g % m);
                scalar_mat(c(r_val.powi(k as i32) * if s == 1 { s_val } else { 1.0 }, 0.0))
            })
            .collect()
    };
    irreps.push(one_dim(1.0, 1.0));
    irreps.push(one_dim(1.0, -1.0));
    if m % 2 == 0 {
        irreps.push(one_dim(-1.0, 1.0));
        irreps.push(one_dim(-1.0, -1.0));
    }
    let swap = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    for h in 1..=(m - 1) / 2 {
        let rep = (0..order)
            .map(|g| {
                let (s, k) = (g / m, g % m);
                let rot = DMatrix::from_diagonal(&DVector::from_vec(vec![
                    root_of_unity(m, (h * k) as i64),
                    root_of_unity(m, -((h * k) as i64)),
                ]));
                if s == 1 {
                    &swap * rot
                } else {
                    rot
                }
            })
            .collect();
        irreps.push(rep);
    }
    GroupData { name: format!("D{m}"), table, irreps }
}

/// `S_3` as the dihedral group of order 6; blocks `[1, 1, 2]`.
pub fn symmetric_group_3() -> GroupData {
    let mut g = dihedral_group(3);
    g.name = "S3".into();
    g
}

/// Spectral projections `p_k = (1/m) sum_l w^{-kl} g^l` of a unitary `g` of
/// order `m`, given by its powers.
pub fn spectral_projections(alg: &BlockAlgebra, powers: &[Element]) -> Vec<Element> {
    let m = powers.len();
    (0..m)
        .map(|k| {
            powers.iter().enumerate().fold(alg.zero(), |acc, (l, gl)| {
                acc.add(&gl.scale(root_of_unity(m, -((k * l) as i64)) / c(m as f64, 0.0)))
            })
        })
        .collect()
}

/// The grading action `u_ij = p_{(i - j) mod m}` on `m` points, where the `p_k`
/// are the spectral projections of a group-like unitary of order `m`.
pub fn grading_action(
    name: &str,
    group: Arc<QuantumGroup>,
    powers: &[Element],
    space: FiniteMetricSpace<f64>,
) -> Result<CoAction> {
    let m = powers.len();
    if space.n() != m {
        return Err(Error::DimensionMismatch { expected: m, got: space.n() });
    }
    let p = spectral_projections(group.algebra(), powers);
    let u = (0..m).map(|i| (0..m).map(|j| p[(i + m - j) % m].clone()).collect()).collect();
    CoAction::new(name, group, space, u)
}

/// Product action on `m1 * m2` points of two commuting gradings; point
/// `(i1, i2)` is `i1 * m2 + i2`.
pub fn product_grading_action(
    name: &str,
    group: Arc<QuantumGroup>,
    first: &[Element],
    second: &[Element],
    space: FiniteMetricSpace<f64>,
) -> Result<CoAction> {
    let (m1, m2) = (first.len(), second.len());
    if space.n() != m1 * m2 {
        return Err(Error::DimensionMismatch { expected: m1 * m2, got: space.n() });
    }
    let p = spectral_projections(group.algebra(), first);
    let q = spectral_projections(group.algebra(), second);
    let n = m1 * m2;
    let u = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (i1, i2) = (i / m2, i % m2);
                    let (j1, j2) = (j / m2, j % m2);
                    p[(i1 + m1 - j1) % m1].mul(&q[(i2 + m2 - j2) % m2])
                })
                .collect()
        })
        .collect();
    CoAction::new(name, group, space, u)
}

fn powers_of(x: &Element, order: usize, alg: &BlockAlgebra) -> Vec<Element> {
    let mut out = vec![alg.one()];
    for _ in 1..order {
        let next = out.last().expect("non-empty").mul(x);
        out.push(next);
    }
    out
}

/// The Kac-Paljutkin quantum group, blocks `[1, 1, 1, 1, 2]`, together with
/// its generators `x, y, z`.
pub fn kac_paljutkin() -> Result<(Arc<QuantumGroup>, [Element; 3])> {
    let alg = BlockAlgebra::new(vec![1, 1, 1, 1, 2])?;
    let d = alg.dim();
    let z0 = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let mk = |s: [C64; 4], m: [C64; 4]| Element {
        blocks: vec![
            scalar_mat(s[0]),
            scalar_mat(s[1]),
            scalar_mat(s[2]),
            scalar_mat(s[3]),
            DMatrix::from_row_slice(2, 2, &m),
        ],
    };
    let x = mk([one, one, -one, -one], [one, z0, z0, -one]);
    let y = mk([one, one, -one, -one], [-one, z0, z0, one]);
    let z = mk([one, -one, i, -i], [z0, one, one, z0]);

    let (tens, perm) = alg.tensor(&alg);
    let mut inv_perm = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv_perm[p] = k;
    }
    let kron = |a: &Element, b: &Element| -> Element {
        let (ca, cb) = (alg.coords(a), alg.coords(b));
        let mut w = DVector::zeros(d * d);
        for p in 0..d {
            for q in 0..d {
                w[perm[p * d + q]] = ca[p] * cb[q];
            }
        }
        tens.element(&w)
    };
    let to_kron = |t: &Element| -> DVector<C64> {
        let w = tens.coords(t);
        DVector::from_fn(d * d, |k, _| w[perm[k]])
    };
    let _ = &inv_perm;
    let unit = alg.one();
    let twist = kron(&unit, &unit)
        .add(&kron(&unit, &x))
        .add(&kron(&y, &unit))
        .sub(&kron(&y, &x))
        .scale_real(0.5);
    let dx = kron(&x, &x);
    let dy = kron(&y, &y);
    let dz = twist.mul(&kron(&z, &z));

    // monomials x^a y^b z^c, their coproducts and antipodes
    let mut mons = Vec::new();
    let mut dmons = Vec::new();
    let mut smons = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                let mut mon = unit.clone();
                let mut dm = kron(&unit, &unit);
                for _ in 0..a {
                    mon = mon.mul(&x);
                    dm = dm.mul(&dx);
                }
                for _ in 0..b {
                    mon = mon.mul(&y);
                    dm = dm.mul(&dy);
                }
                for _ in 0..cc {
                    mon = mon.mul(&z);
                    dm = dm.mul(&dz);
                }
                // S(x^a y^b z^c) = z^c y^b x^a, using S(x) = x, S(y) = y, S(z) = z
                let mut s = unit.clone();
                for _ in 0..cc {
                    s = s.mul(&z);
                }
                for _ in 0..b {
                    s = s.mul(&y);
                }
                for _ in 0..a {
                    s = s.mul(&x);
                }
                mons.push(alg.coords(&mon));
                dmons.push(to_kron(&dm));
                smons.push(alg.coords(&s));
            }
        }
    }
    let mmat = DMatrix::from_columns(&mons);
    let minv = mmat
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("monomials do not span the algebra".into()))?;
    let mut delta = DMatrix::<C64>::zeros(d * d, d);
    let mut kappa = DMatrix::<C64>::zeros(d, d);
    let mut eps = DVector::<C64>::zeros(d);
    for k in 0..d {
        for mi in 0..8 {
            let w = minv[(mi, k)];
            delta.column_mut(k).axpy(w, &dmons[mi], one);
            kappa.column_mut(k).axpy(w, &smons[mi], one);
            eps[k] += w;
        }
    }
    let clean = |v: &mut C64| {
        if v.re.abs() < 1e-13 {
            v.re = 0.0;
        }
        if v.im.abs() < 1e-13 {
            v.im = 0.0;
        }
    };
    delta.iter_mut().for_each(clean);
    kappa.iter_mut().for_each(clean);
    eps.iter_mut().for_each(clean);
    let qg = QuantumGroup::new_verified("KP", alg, delta, eps, kappa, BUILD_TOL)?;
    Ok((Arc::new(qg), [x, y, z]))
}

/// A faithful action of the Kac-Paljutkin quantum group on 4 points,
/// obtained from the commutative coideal spanned by the projections
/// `P_0 = e_1 + e_3`, `P_1 = e_2 + e_4`, `P_2 = Q`, `P_3 = 1_2 - Q` with
/// `Q = (1 + (sigma_x - sigma_y) / sqrt 2) / 2` in the 2x2 block. Writing
/// `Delta(P_j) = sum_i P_i (x) u_ij` gives the magic unitary.
pub fn kac_paljutkin_action(name: &str, space: FiniteMetricSpace<f64>) -> Result<CoAction> {
    if space.n() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: space.n() });
    }
    let (kp, _) = kac_paljutkin()?;
    let alg = kp.algebra().clone();
    let d = alg.dim();
    let h = std::f64::consts::FRAC_1_SQRT_2 / 2.0;
    // (1 + (sigma_x - sigma_y)/sqrt 2) / 2
    let q = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(h, h), c(h, -h), c(0.5, 0.0)]);
    let mut proj = vec![alg.zero(); 4];
    proj[0].blocks[0][(0, 0)] = c(1.0, 0.0);
    proj[0].blocks[2][(0, 0)] = c(1.0, 0.0);
    proj[1].blocks[1][(0, 0)] = c(1.0, 0.0);
    proj[1].blocks[3][(0, 0)] = c(1.0, 0.0);
    proj[2].blocks[4] = q.clone();
    proj[3].blocks[4] = DMatrix::identity(2, 2) - q;
    let mut u = vec![vec![alg.zero(); 4]; 4];
    for j in 0..4 {
        let w = kp.delta_coords(&proj[j]);
        for i in 0..4 {
            // slice the first leg with a -> Tr(P_i a) / Tr(P_i)
            let tr = alg.total_trace(&proj[i]);
            let phi: Vec<C64> = (0..d).map(|a| alg.total_trace(&proj[i].mul(&alg.basis_element(a))) / tr).collect();
            let coords = DVector::from_fn(d, |b, _| (0..d).map(|a| phi[a] * w[a * d + b]).sum());
            u[i][j] = alg.element(&coords);
        }
    }
    CoAction::new(name, kp, space, u)
}

/// Four points with `d(0,1) = 1`, `d(2,3) = 2` and all other distances 2;
/// the metrics preserved by [`kac_paljutkin_action`] have this shape.
pub fn kite_space() -> FiniteMetricSpace<f64> {
    integer_space(&[&[0, 1, 2, 2], &[1, 0, 2, 2], &[2, 2, 0, 2], &[2, 2, 2, 0]])
}

/// `A = C` acting trivially.
pub fn trivial_group() -> QuantumGroup {
    let alg = BlockAlgebra::new(vec![1]).expect("valid");
    let one = DMatrix::from_element(1, 1, c(1.0, 0.0));
    QuantumGroup::new_verified("C", alg, one.clone(), DVector::from_element(1, c(1.0, 0.0)), one, BUILD_TOL)
        .expect("the trivial quantum group is valid")
}

/// `u_ij = delta_ij 1`.
pub fn trivial_action(name: &str, group: Arc<QuantumGroup>, space: FiniteMetricSpace<f64>) -> Result<CoAction> {
    let n = space.n();
    let alg = group.algebra().clone();
    let u = (0..n)
        .map(|i| (0..n).map(|j| if i == j { alg.one() } else { alg.zero() }).collect())
        .collect();
    CoAction::new(name, group, space, u)
}

// ---------------------------------------------------------------- spaces

fn rational_space(rows: &[&[(i64, i64)]]) -> FiniteMetricSpace<f64> {
    let m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| r.iter().map(|&(a, b)| Rational::from_ratio(a, b)).collect())
        .collect();
    validate_metric(m, 0.0).expect("built-in metric is valid").to_f64()
}

fn integer_space(rows: &[&[i64]]) -> FiniteMetricSpace<f64> {
    let owned: Vec<Vec<(i64, i64)>> = rows.iter().map(|r| r.iter().map(|&v| (v, 1)).collect()).collect();
    let refs: Vec<&[(i64, i64)]> = owned.iter().map(|r| r.as_slice()).collect();
    rational_space(&refs)
}

/// Shortest-path metric of the `n`-cycle.
pub fn cycle_space(n: usize) -> FiniteMetricSpace<f64> {
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| (i as i64 - j as i64).rem_euclid(n as i64).min((j as i64 - i as i64).rem_euclid(n as i64))).collect())
        .collect();
    let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
    integer_space(&refs)
}

/// Three points with `d(0,1) = 1`, `d(0,2) = d(1,2) = 2`.
pub fn isosceles_space() -> FiniteMetricSpace<f64> {
    integer_space(&[&[0, 1, 2], &[1, 0, 2], &[2, 2, 0]])
}

pub fn equilateral_space(n: usize) -> FiniteMetricSpace<f64> {
    let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i != j)).collect()).collect();
    let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
    integer_space(&refs)
}

/// A 4-cycle with sides 1 and diagonals 3/2 and 2, so only the half-turn
/// among rotations preserves distances.
pub fn broken_square_space() -> FiniteMetricSpace<f64> {
    rational_space(&[
        &[(0, 1), (1, 1), (3, 2), (1, 1)],
        &[(1, 1), (0, 1), (1, 1), (2, 1)],
        &[(3, 2), (1, 1), (0, 1), (1, 1)],
        &[(1, 1), (2, 1), (1, 1), (0, 1)],
    ])
}

/// Four points `(i1, i2)` of a 1 x 2 rectangle, point `i1 * 2 + i2`, with
/// the shortest-path metric of its sides.
pub fn rectangle_space() -> FiniteMetricSpace<f64> {
    integer_space(&[&[0, 1, 2, 3], &[1, 0, 3, 2], &[2, 3, 0, 1], &[3, 2, 1, 0]])
}

/// Four points on a path with unequal gaps; no nontrivial symmetry.
pub fn skewed_four_space() -> FiniteMetricSpace<f64> {
    integer_space(&[&[0, 1, 3, 4], &[1, 0, 2, 3], &[3, 2, 0, 1], &[4, 3, 1, 0]])
}

// ---------------------------------------------------------------- catalog

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Trivial,
    Classical,
    GroupDual,
    KacPaljutkin,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: EntryKind,
    pub action: CoAction,
    /// The permutation group for classical entries.
    pub permutations: Option<Vec<Perm>>,
}

fn classical(name: &str, space: FiniteMetricSpace<f64>, gens: &[Perm]) -> Result<CatalogEntry> {
    let (mut action, perms) = from_permutation_group(name, space, gens)?;
    action.name = format!("{} on {}", action.group().name(), describe_space_name(name));
    Ok(CatalogEntry { name: action.name.clone(), kind: EntryKind::Classical, action, permutations: Some(perms) })
}

fn describe_space_name(name: &str) -> String {
    name.split_once('@').map_or(name.to_string(), |(_, s)| s.to_string())
}

fn rotation(n: usize, k: usize) -> Perm {
    (0..n).map(|j| (j + k) % n).collect()
}

/// Every built-in action.
pub fn builtin_catalog() -> Result<Vec<CatalogEntry>> {
    let mut out = Vec::new();
    let triv = Arc::new(trivial_group());
    out.push(CatalogEntry {
        name: "C acting trivially on the isosceles triangle".into(),
        kind: EntryKind::Trivial,
        action: trivial_action("C trivial on isosceles", triv.clone(), isosceles_space())?,
        permutations: None,
    });
    out.push(CatalogEntry {
        name: "C acting trivially on the broken square".into(),
        kind: EntryKind::Trivial,
        action: trivial_action("C trivial on broken square", triv, broken_square_space())?,
        permutations: None,
    });

    for n in 3..=6 {
        out.push(classical(&format!("Z{n}@{n}-cycle"), cycle_space(n), &[rotation(n, 1)])?);
    }
    let s3 = [vec![1, 2, 0], vec![1, 0, 2]];
    out.push(classical("S3@equilateral triangle", equilateral_space(3), &s3)?);
    out.push(classical("S3@isosceles triangle", isosceles_space(), &s3)?);
    out.push(classical("Z2@isosceles triangle (swap 0,1)", isosceles_space(), &[vec![1, 0, 2]])?);
    out.push(classical("Z2@isosceles triangle (swap 0,2)", isosceles_space(), &[vec![2, 1, 0]])?);
    out.push(classical("Z3@isosceles triangle", isosceles_space(), &[vec![1, 2, 0]])?);
    out.push(classical("Z4@broken square", broken_square_space(), &[rotation(4, 1)])?);
    let d4 = [rotation(4, 1), vec![0, 3, 2, 1]];
    out.push(classical("D4@square", cycle_space(4), &d4)?);
    out.push(classical("D4@broken square", broken_square_space(), &d4)?);
    out.push(classical("S4@square", cycle_space(4), &[vec![1, 2, 3, 0], vec![1, 0, 2, 3]])?);
    out.push(classical("Z2xZ2@rectangle", rectangle_space(), &[vec![1, 0, 3, 2], vec![2, 3, 0, 1]])?);
    out.push(classical("Z2@skewed path (reflection)", skewed_four_space(), &[vec![3, 2, 1, 0]])?);

    // group duals acting through gradings
    let s3d = dual_of_group(&symmetric_group_3())?;
    let r = &s3d.elements[1];
    let rp = powers_of(r, 3, s3d.group.algebra());
    for (label, space) in [("3-cycle", cycle_space(3)), ("isosceles triangle", isosceles_space())] {
        out.push(CatalogEntry {
            name: format!("C*(S3) grading by r on the {label}"),
            kind: EntryKind::GroupDual,
            action: grading_action(&format!("C*(S3) grading on {label}"), s3d.group.clone(), &rp, space)?,
            permutations: None,
        });
    }
    out.push(CatalogEntry {
        name: "C*(S3) acting trivially on the isosceles triangle".into(),
        kind: EntryKind::Trivial,
        action: trivial_action("C*(S3) trivial", s3d.group.clone(), isosceles_space())?,
        permutations: None,
    });
    let d4d = dual_of_group(&dihedral_group(4))?;
    let rp = powers_of(&d4d.elements[1], 4, d4d.group.algebra());
    for (label, space) in [("4-cycle", cycle_space(4)), ("broken square", broken_square_space())] {
        out.push(CatalogEntry {
            name: format!("C*(D4) grading by r on the {label}"),
            kind: EntryKind::GroupDual,
            action: grading_action(&format!("C*(D4) grading on {label}"), d4d.group.clone(), &rp, space)?,
            permutations: None,
        });
    }
    let sp = powers_of(&d4d.elements[4], 2, d4d.group.algebra());
    out.push(CatalogEntry {
        name: "C*(D4) grading by s on 2 points".into(),
        kind: EntryKind::GroupDual,
        action: grading_action("C*(D4) grading by s", d4d.group.clone(), &sp, cycle_space(2))?,
        permutations: None,
    });

    let (kp, [x, y, _z]) = kac_paljutkin()?;
    let xp = powers_of(&x, 2, kp.algebra());
    let yp = powers_of(&y, 2, kp.algebra());
    for (label, space) in [("rectangle", rectangle_space()), ("skewed path", skewed_four_space())] {
        out.push(CatalogEntry {
            name: format!("KP grading by x, y on the {label}"),
            kind: EntryKind::KacPaljutkin,
            action: product_grading_action(&format!("KP grading on {label}"), kp.clone(), &xp, &yp, space)?,
            permutations: None,
        });
    }
    for (label, space) in [("kite", kite_space()), ("rectangle", rectangle_space())] {
        out.push(CatalogEntry {
            name: format!("KP acting faithfully on the {label}"),
            kind: EntryKind::KacPaljutkin,
            action: kac_paljutkin_action(&format!("KP on {label}"), space)?,
            permutations: None,
        });
    }
    Ok(out)
}

/// A reproducible random action: a permutation group of order at most 24 on
/// 3 to 6 points, or a cyclic grading of a group dual, each on either a
/// random metric or one made invariant under the group.
pub fn random_action(seed: u64) -> Result<CatalogEntry> {
    random_action_in(seed, 3, 6, &[MetricModel::ShortestPathGraph, MetricModel::EuclideanSample])
}

/// [`random_action`] on `n_min..=n_max` points with metrics drawn from `models`.
pub fn random_action_in(seed: u64, n_min: usize, n_max: usize, models: &[MetricModel]) -> Result<CatalogEntry> {
    if n_min < 2 || n_min > n_max || models.is_empty() {
        return Err(Error::InvalidInput(format!(
            "need 2 <= n_min <= n_max and at least one metric model, got {n_min}..={n_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = models[rng.random_range(0..models.len())];
    let invariant = rng.random_bool(0.5);
    let (lo, hi) = (n_min.max(3), n_max.min(5));
    if lo <= hi && rng.random_range(0..4) == 0 {
        // cyclic grading of C*(D_m) on m points
        let m = rng.random_range(lo..=hi);
        let dual = dual_of_group(&dihedral_group(m))?;
        let powers = powers_of(&dual.elements[1], m, dual.group.algebra());
        let base: FiniteMetricSpace<Rational> = random_metric_space(m, rng.random(), model)?;
        let space = if invariant {
            let rots: Vec<Perm> = (0..m).map(|k| rotation(m, k)).collect();
            invariant_metric(&base, &rots)
        } else {
            base
        };
        let name = format!("random C*(D{m}) grading (seed {seed})");
        return Ok(CatalogEntry {
            name: name.clone(),
            kind: EntryKind::GroupDual,
            action: grading_action(&name, dual.group, &powers, space.to_f64())?,
            permutations: None,
        });
    }
    loop {
        let n = rng.random_range(n_min..=n_max);
        let gens: Vec<Perm> = (0..rng.random_range(1..=2))
            .map(|_| {
                let mut p: Perm = (0..n).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        let elements = group_closure(n, &gens)?;
        if elements.len() > 24 {
            continue;
        }
        let base: FiniteMetricSpace<Rational> = random_metric_space(n, rng.random(), model)?;
        let space = if invariant { invariant_metric(&base, &elements) } else { base };
        let (mut action, perms) = from_permutation_group("G", space.to_f64(), &gens)?;
        action.name = format!("random C(G), |G| = {}, on {n} points (seed {seed})", perms.len());
        return Ok(CatalogEntry {
            name: action.name.clone(),
            kind: EntryKind::Classical,
            action,
            permutations: Some(perms),
        });
    }
}

/// `d_G(i, j) = max_g d(g i, g j)`, the smallest invariant metric above `d`.
pub fn invariant_metric<S: Scalar>(space: &FiniteMetricSpace<S>, group: &[Perm]) -> FiniteMetricSpace<S> {
    let n = space.n();
    let mut m = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut best = S::zero();
            for g in group {
                let v = space.d(g[i], g[j]).clone();
                if v > best {
                    best = v;
                }
            }
            m[i][j] = best;
        }
    }
    validate_metric(m, space.tol()).expect("invariant hull of a metric is a metric")
}

/// Permutations in `perms` that preserve all distances exactly.
pub fn isometric_permutations(space: &FiniteMetricSpace<f64>, perms: &[Perm], tol: f64) -> Vec<Perm> {
    let n = space.n();
    perms
        .iter()
        .filter(|g| (0..n).all(|i| (0..n).all(|j| (space.d(g[i], g[j]) - space.d(i, j)).abs() <= tol)))
        .cloned()
        .collect()
}
