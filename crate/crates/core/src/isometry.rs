//! Decision procedures for the isometry conditions of an action.
//!
//! Every quantifier over states is resolved exactly: the supremum of `psi(a)`
//! over states of a block algebra is the largest eigenvalue of the
//! self-adjoint element `a`, attained at a vector state on one block. The
//! transport conditions reduce to finitely many such elements, indexed by the
//! vertices of the Lipschitz or dual polytopes, or by the subsets entering the
//! Hall condition.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cqg::algebra::{span_rank, BlockAlgebra, Element, Extremal, C64};
use crate::cqg::coaction::{a_element, act_on_function, act_on_point, CoAction};
use crate::cqg::state::{extreme_state, StateFunctional};
use crate::error::{Error, Result};
use crate::hall::{decide_hall, neighborhood, Direction, HallInstance, SUBSET_GUARD};
use crate::metric::{ball, level_set, lipschitz_constant, sublevel_set, FiniteMetricSpace, PairSet};
use crate::transport::{
    enumerate_dual_vertices, enumerate_lipschitz_vertices, wasserstein_inf, wasserstein_p, ProbVector,
    WassersteinOrder, VERTEX_GUARD,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    D,
    LipP(f64),
    LipInf,
    TheoremMain,
    SupportConjecture,
}

impl Condition {
    pub fn lip(order: WassersteinOrder) -> Self {
        match order {
            WassersteinOrder::Finite(p) => Condition::LipP(p),
            WassersteinOrder::Infinite => Condition::LipInf,
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Condition::D => write!(f, "D"),
            Condition::LipP(p) => write!(f, "Lip_{p}"),
            Condition::LipInf => write!(f, "Lip_inf"),
            Condition::TheoremMain => write!(f, "theorem-main"),
            Condition::SupportConjecture => write!(f, "support-conjecture"),
        }
    }
}

/// A vector state `a -> <xi, a_k xi>` on block `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorState {
    pub block: usize,
    /// `[re, im]` components of the unit vector.
    pub vector: Vec<[f64; 2]>,
}

impl VectorState {
    fn from_extremal(e: &Extremal) -> Self {
        VectorState { block: e.block, vector: e.vector.iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn to_state(&self, alg: &BlockAlgebra) -> Result<StateFunctional> {
        let xi = DVector::from_iterator(self.vector.len(), self.vector.iter().map(|v| C64::new(v[0], v[1])));
        extreme_state(alg, self.block, &xi, 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WitnessDetail {
    /// Norm of a defect element.
    Residual,
    /// Ball-version defect at radius `r`.
    Ball { radius: f64 },
    /// A state whose transported point masses are too far apart.
    Measures { state: Option<VectorState>, mu: Vec<f64>, nu: Vec<f64>, distance: f64 },
    /// A Lipschitz-polytope vertex and the state maximizing against it.
    LipschitzVertex { f: Vec<f64>, state: VectorState },
    /// A dual-polytope vertex and the state maximizing against it.
    DualVertex { f: Vec<f64>, g: Vec<f64>, state: VectorState },
    /// A Hall violator for every state near `state`.
    Subset { subset: Vec<usize>, neighborhood: Vec<usize>, state: VectorState },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: usize,
    pub y: usize,
    /// Amount by which the condition fails; always above the tolerance.
    pub violation: f64,
    pub detail: WitnessDetail,
}

/// What was checked when a condition holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Number of inequalities or identities checked.
    pub checked: usize,
    /// Largest signed defect seen (`<= tol` when the condition holds).
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryVerdict {
    pub condition: Condition,
    pub procedure: String,
    pub holds: bool,
    pub witness: Option<Witness>,
    pub certificate: Certificate,
}

/// Running maximum over checks, keeping the first (lexicographic) worst.
struct Tracker {
    checked: usize,
    worst: f64,
    witness: Option<Witness>,
}

impl Tracker {
    fn new() -> Self {
        Tracker { checked: 0, worst: f64::NEG_INFINITY, witness: None }
    }

    /// Records a defect, with `make` building the witness if it is the new worst.
    fn see(&mut self, defect: f64, make: impl FnOnce() -> Witness) {
        self.checked += 1;
        if defect > self.worst {
            self.worst = defect;
            self.witness = Some(make());
        }
    }

    fn finish(self, condition: Condition, procedure: &str, tol: f64) -> IsometryVerdict {
        let worst = if self.checked == 0 { 0.0 } else { self.worst };
        let holds = worst <= tol;
        IsometryVerdict {
            condition,
            procedure: procedure.into(),
            holds,
            witness: if holds { None } else { self.witness },
            certificate: Certificate { checked: self.checked, worst },
        }
    }
}

/// Tolerance for a comparison against a quantity of size `scale`.
fn slack(tol: f64, scale: f64) -> f64 {
    tol * scale.abs().max(1.0)
}

/// The defects `c_xy = sum_j d(y,j) u_xj - sum_j d(x,j) kappa(u_yj)`,
/// indexed `x * n + y`.
pub fn commutator_elements(action: &CoAction) -> Vec<Element> {
    let n = action.n();
    let qg = action.group();
    let d = action.space();
    let ku: Vec<Vec<Element>> = (0..n).map(|y| (0..n).map(|j| qg.kappa(action.u(y, j))).collect()).collect();
    let mut out = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            let lhs = action.rho_at(x, d.row(y));
            let rhs = (0..n).fold(qg.algebra().zero(), |acc, j| acc.add(&ku[y][j].scale_real(*d.d(x, j))));
            out.push(lhs.sub(&rhs));
        }
    }
    out
}

/// Condition (D): `rho(d_y)(x) = kappa(rho(d_x)(y))` for all `x, y`.
pub fn check_d(action: &CoAction, tol: f64) -> IsometryVerdict {
    let n = action.n();
    let scale = action.space().max_distance();
    let mut t = Tracker::new();
    for (idx, cxy) in commutator_elements(action).iter().enumerate() {
        let r = cxy.norm();
        let (x, y) = (idx / n, idx % n);
        t.see(r, || Witness { x, y, violation: r, detail: WitnessDetail::Residual });
    }
    t.finish(Condition::D, "defect norms", slack(tol, scale))
}

/// Condition (D) as the commutation `u d = d u`, valid when `kappa(u_ij) = u_ji`.
pub fn check_d_commutant(action: &CoAction, tol: f64) -> Result<IsometryVerdict> {
    let residual = action.kappa_transpose_residual();
    if residual > tol {
        return Err(Error::KappaConventionMismatch { residual });
    }
    let n = action.n();
    let d = action.space();
    let alg = action.group().algebra();
    let mut t = Tracker::new();
    for x in 0..n {
        for y in 0..n {
            let mut e = alg.zero();
            for j in 0..n {
                e = e.add(&action.u(x, j).scale_real(*d.d(j, y))).sub(&action.u(j, y).scale_real(*d.d(x, j)));
            }
            let r = e.norm();
            t.see(r, || Witness { x, y, violation: r, detail: WitnessDetail::Residual });
        }
    }
    Ok(t.finish(Condition::D, "commutant", slack(tol, d.max_distance())))
}

/// Condition (D) through balls: `a_{x;B(y,r)} = kappa(a_{y;B(x,r)})` for every
/// realized radius `r`.
pub fn check_d_balls(action: &CoAction, tol: f64) -> IsometryVerdict {
    let n = action.n();
    let d = action.space();
    let qg = action.group();
    let mut t = Tracker::new();
    for x in 0..n {
        for y in 0..n {
            for &r in d.realized_distances() {
                let by = ball(d, y, &0.0, &r);
                let bx = ball(d, x, &0.0, &r);
                let e = a_element(action, x, &by).sub(&qg.kappa(&a_element(action, y, &bx)));
                let res = e.norm();
                t.see(res, || Witness { x, y, violation: res, detail: WitnessDetail::Ball { radius: r } });
            }
        }
    }
    t.finish(Condition::D, "balls", tol)
}

/// `W_p(x <| psi, y <| psi) <= d(x, y)` for all pairs.
pub fn check_lip_p_state(
    action: &CoAction,
    psi: &StateFunctional,
    order: WassersteinOrder,
    tol: f64,
) -> Result<IsometryVerdict> {
    let n = action.n();
    let space = action.space();
    let pushed: Vec<ProbVector<f64>> = (0..n).map(|x| act_on_point(action, x, psi)).collect::<Result<_>>()?;
    let mut t = Tracker::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let w = match order {
                WassersteinOrder::Finite(p) => wasserstein_p(space, &pushed[x], &pushed[y], p)?,
                WassersteinOrder::Infinite => wasserstein_inf(space, &pushed[x], &pushed[y])?.r,
            };
            let dxy = *space.d(x, y);
            let defect = (w - dxy) / dxy.max(1.0);
            t.see(defect, || Witness {
                x,
                y,
                violation: w - dxy,
                detail: WitnessDetail::Measures {
                    state: None,
                    mu: pushed[x].mass().to_vec(),
                    nu: pushed[y].mass().to_vec(),
                    distance: w,
                },
            });
        }
    }
    Ok(t.finish(Condition::lip(order), "per-state transport", tol))
}

/// Coordinates of the entries `u_xj`, indexed `x * n + j`.
fn entry_coords(action: &CoAction) -> Vec<DVector<C64>> {
    let alg = action.group().algebra();
    action.entries().iter().flatten().map(|e| alg.coords(e)).collect()
}

fn combine(cols: &[DVector<C64>], terms: impl Iterator<Item = (usize, f64)>, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    for (idx, w) in terms {
        if w != 0.0 {
            v.axpy(C64::new(w, 0.0), &cols[idx], C64::new(1.0, 0.0));
        }
    }
    v
}

/// (Lip_1) for every state: `lambda_max(sum_j f_j (u_xj - u_yj)) <= d(x, y)`
/// for each pair and each vertex `f` of the Lipschitz polytope.
pub fn check_lip1_universal(action: &CoAction, tol: f64) -> Result<IsometryVerdict> {
    let n = action.n();
    let space = action.space();
    let alg = action.group().algebra();
    let verts = enumerate_lipschitz_vertices(space, VERTEX_GUARD)?;
    let cols = entry_coords(action);
    let mut t = Tracker::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let dxy = *space.d(x, y);
            for f in &verts {
                let v = combine(&cols, (0..n).flat_map(|j| [(x * n + j, f[j]), (y * n + j, -f[j])]), alg.dim());
                let e = alg.extremal(&v, true);
                let defect = (e.value - dxy) / dxy.max(1.0);
                t.see(defect, || Witness {
                    x,
                    y,
                    violation: e.value - dxy,
                    detail: WitnessDetail::LipschitzVertex { f: f.clone(), state: VectorState::from_extremal(&e) },
                });
            }
        }
    }
    Ok(t.finish(Condition::LipP(1.0), "Lipschitz vertices", tol))
}

/// (Lip_p) for every state, finite `p`: `lambda_max(sum_j f_j u_xj + g_j u_yj) <= d(x, y)^p`
/// for each pair and each vertex of `{f_i + g_j <= d(i, j)^p}`.
///
/// The objective is unchanged by `(f - t, g + t)` because rows of `u` sum to
/// one, and is monotone in `(f, g)` because the `u_xj` are positive; so the
/// supremum over the unbounded dual polyhedron is attained at a vertex.
pub fn check_lip_p_universal(action: &CoAction, order: WassersteinOrder, tol: f64) -> Result<IsometryVerdict> {
    let p = match order {
        WassersteinOrder::Infinite => return check_winf_universal(action, tol),
        WassersteinOrder::Finite(p) => p,
    };
    let n = action.n();
    let space = action.space();
    let alg = action.group().algebra();
    let cost = space.cost_matrix(p);
    let verts = enumerate_dual_vertices(&cost, VERTEX_GUARD, space.tol())?;
    let cols = entry_coords(action);
    let mut t = Tracker::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let bound = cost[x][y];
            for dv in &verts {
                let v = combine(&cols, (0..n).flat_map(|j| [(x * n + j, dv.f[j]), (y * n + j, dv.g[j])]), alg.dim());
                let e = alg.extremal(&v, true);
                let defect = (e.value - bound) / bound.max(1.0);
                t.see(defect, || Witness {
                    x,
                    y,
                    violation: e.value - bound,
                    detail: WitnessDetail::DualVertex {
                        f: dv.f.clone(),
                        g: dv.g.clone(),
                        state: VectorState::from_extremal(&e),
                    },
                });
            }
        }
    }
    Ok(t.finish(Condition::LipP(p), "dual vertices", tol))
}

/// For all states, a `(x <| psi, y <| psi)`-coupling supported on `pairs(x, y)`:
/// `lambda_min(a_{y;N(S)} - a_{x;S}) >= 0` for every subset `S`.
fn universal_support(
    action: &CoAction,
    tol: f64,
    pairs: impl Fn(&FiniteMetricSpace<f64>, f64) -> PairSet,
    condition: Condition,
    procedure: &str,
) -> Result<IsometryVerdict> {
    let n = action.n();
    if n > SUBSET_GUARD {
        return Err(Error::SizeGuardExceeded { what: "subset enumeration", size: n, limit: SUBSET_GUARD });
    }
    let space = action.space();
    let alg = action.group().algebra();
    let cols = entry_coords(action);
    let mut t = Tracker::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let ys = pairs(space, *space.d(x, y));
            for mask in 1u64..(1 << n) {
                let subset: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                let nb = neighborhood(&ys, &subset, Direction::Forward);
                let v = combine(
                    &cols,
                    nb.iter().map(|&j| (y * n + j, 1.0)).chain(subset.iter().map(|&j| (x * n + j, -1.0))),
                    alg.dim(),
                );
                let e = alg.extremal(&v, false);
                let defect = -e.value;
                t.see(defect, || Witness {
                    x,
                    y,
                    violation: defect,
                    detail: WitnessDetail::Subset {
                        subset: subset.clone(),
                        neighborhood: nb.clone(),
                        state: VectorState::from_extremal(&e),
                    },
                });
            }
        }
    }
    Ok(t.finish(condition, procedure, tol))
}

/// (Lip_inf) for every state: couplings supported on `{d <= d(x, y)}`.
pub fn check_winf_universal(action: &CoAction, tol: f64) -> Result<IsometryVerdict> {
    universal_support(action, tol, |s, r| sublevel_set(s, &r), Condition::LipInf, "sublevel Hall")
}

/// For all states, couplings of `x <| psi` and `y <| psi` supported on the
/// level set `{d = d(x, y)}`.
pub fn check_theorem_main(action: &CoAction, tol: f64) -> Result<IsometryVerdict> {
    universal_support(action, tol, |s, r| level_set(s, &r), Condition::TheoremMain, "level Hall")
}

/// The level-set coupling property for one state, decided by max-flow.
pub fn check_theorem_main_state(action: &CoAction, psi: &StateFunctional, tol: f64) -> Result<IsometryVerdict> {
    let n = action.n();
    let space = action.space();
    let pushed: Vec<ProbVector<f64>> = (0..n).map(|x| act_on_point(action, x, psi)).collect::<Result<_>>()?;
    let mut t = Tracker::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let inst = HallInstance::new(pushed[x].clone(), pushed[y].clone(), level_set(space, space.d(x, y)))?;
            let verdict = decide_hall(&inst, 1e-9)?;
            let defect = verdict.violator.as_ref().map_or(0.0, |v| v.mu_of_subset - v.nu_of_neighborhood);
            t.see(defect, || Witness {
                x,
                y,
                violation: defect,
                detail: WitnessDetail::Measures {
                    state: None,
                    mu: pushed[x].mass().to_vec(),
                    nu: pushed[y].mass().to_vec(),
                    distance: *space.d(x, y),
                },
            });
        }
    }
    Ok(t.finish(Condition::TheoremMain, "per-state level Hall", tol))
}

/// Whether `||a_{x;S} a_{y;T}|| <= tol`, given `|d(s,t) - d(x,y)| >= delta > 0`
/// for all `s in S`, `t in T`.
pub fn check_orthogonality(
    action: &CoAction,
    x: usize,
    y: usize,
    s: &[usize],
    t: &[usize],
    delta: f64,
    tol: f64,
) -> Result<bool> {
    let space = action.space();
    let n = action.n();
    if x >= n || y >= n || s.iter().chain(t).any(|&i| i >= n) {
        return Err(Error::InvalidInput("point out of range".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::HypothesisViolated(format!("delta must be positive, got {delta}")));
    }
    let dxy = *space.d(x, y);
    for &a in s {
        for &b in t {
            let gap = (space.d(a, b) - dxy).abs();
            if gap < delta {
                return Err(Error::HypothesisViolated(format!(
                    "|d({a},{b}) - d({x},{y})| = {gap} < {delta}"
                )));
            }
        }
    }
    Ok(a_element(action, x, s).mul(&a_element(action, y, t)).norm() <= tol)
}

/// Whether `f -> (sum_j f_j u_xj)_x` is one-to-one.
pub fn check_injectivity(action: &CoAction, tol: f64) -> bool {
    let n = action.n();
    let alg = action.group().algebra();
    let d = alg.dim();
    let cols: Vec<DVector<C64>> = (0..n)
        .map(|j| {
            let mut v = DVector::zeros(n * d);
            for x in 0..n {
                v.rows_mut(x * d, d).copy_from(&alg.coords(action.u(x, j)));
            }
            v
        })
        .collect();
    span_rank(&cols, tol.max(1e-10)) == n
}

/// `L(psi |> f) <= L(f)` on `samples` random functions and on every vertex of
/// the Lipschitz polytope.
pub fn check_lip_seminorm_state(
    action: &CoAction,
    psi: &StateFunctional,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<bool> {
    let space = action.space();
    let n = action.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fs: Vec<Vec<f64>> = (0..samples).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    fs.extend(enumerate_lipschitz_vertices(space, VERTEX_GUARD)?);
    for f in &fs {
        let before = lipschitz_constant(space, f)?;
        let after = lipschitz_constant(space, &act_on_function(action, psi, f)?)?;
        if after > before + slack(tol, before) {
            return Ok(false);
        }
    }
    Ok(true)
}
