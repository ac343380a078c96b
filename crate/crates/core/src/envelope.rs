//! The (D)-isometric envelope of an action: the largest quantum-group
//! quotient of `A` through which the action satisfies condition (D).
//!
//! Two-sided ideals of `M_{n_1} + ... + M_{n_K}` are exactly the sums of some
//! of the blocks, so the ideal generated by the defects `c_xy` is read off
//! their block supports. It is then enlarged until the quotient inherits the
//! comultiplication, counit and antipode.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cqg::algebra::{c, BlockAlgebra, Element, C64};
use crate::cqg::coaction::CoAction;
use crate::cqg::quantum_group::QuantumGroup;
use crate::cqg::state::{convolve_functionals, Functional};
use crate::error::{Error, Result};
use crate::isometry::{check_d, commutator_elements};

/// Block limit for exhaustive subset enumeration.
pub const BRUTE_FORCE_BLOCKS: usize = 12;
/// Limit on the number of Hopf quotients enumerated by closure.
pub const QUOTIENT_GUARD: usize = 4096;

/// The ideal `sum_{k in blocks} M_{n_k}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockIdeal {
    pub blocks: BTreeSet<usize>,
}

impl BlockIdeal {
    pub fn empty() -> Self {
        BlockIdeal { blocks: BTreeSet::new() }
    }

    pub fn full(k: usize) -> Self {
        BlockIdeal { blocks: (0..k).collect() }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.blocks.contains(&k)
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_subset_of(&self, other: &BlockIdeal) -> bool {
        self.blocks.is_subset(&other.blocks)
    }

    /// Blocks outside the ideal, in increasing order.
    pub fn surviving(&self, k: usize) -> Vec<usize> {
        (0..k).filter(|b| !self.blocks.contains(b)).collect()
    }
}

/// The ideal generated by `generators`: every block where one of them is nonzero.
pub fn generated_ideal(qg: &QuantumGroup, generators: &[Element], tol: f64) -> BlockIdeal {
    let k = qg.algebra().num_blocks();
    BlockIdeal { blocks: (0..k).filter(|&b| generators.iter().any(|g| g.block_norm(b) > tol)).collect() }
}

/// `fusion[l][m]`: blocks `k` such that `Delta(M_{n_k})` has a component in `M_{n_l} (x) M_{n_m}`.
fn fusion(qg: &QuantumGroup, tol: f64) -> Vec<Vec<BTreeSet<usize>>> {
    let alg = qg.algebra();
    let k = alg.num_blocks();
    let mut out = vec![vec![BTreeSet::new(); k]; k];
    for gamma in 0..alg.dim() {
        let (kb, _, _) = alg.locate(gamma);
        for &(a, b, v) in qg.delta_terms(gamma) {
            if v.norm() > tol {
                out[alg.locate(a).0][alg.locate(b).0].insert(kb);
            }
        }
    }
    out
}

/// The Hopf saturation of an ideal and the number of rounds that enlarged it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub ideal: BlockIdeal,
    pub iterations: usize,
}

/// Grows `ideal` until `(pi (x) pi) Delta` vanishes on it, it is stable under
/// the antipode and it misses the counit. Whenever a killed block `k` has a
/// component in `M_{n_l} (x) M_{n_m}` with `l, m` surviving, both `l` and `m`
/// are added.
pub fn hopf_saturate(qg: &QuantumGroup, ideal: &BlockIdeal, tol: f64) -> Result<Saturation> {
    let k = qg.algebra().num_blocks();
    let fus = fusion(qg, tol);
    let kap = qg.kappa_block_map(tol);
    let counit = qg.counit_block();
    let mut cur = ideal.clone();
    let mut iterations = 0;
    loop {
        if counit.is_some_and(|e| cur.contains(e)) || cur.blocks.len() == k {
            return Err(Error::SaturationReachedFullAlgebra { iterations });
        }
        let mut add = BTreeSet::new();
        for &b in &cur.blocks {
            for &t in &kap[b] {
                if !cur.contains(t) {
                    add.insert(t);
                }
            }
        }
        for l in 0..k {
            for m in 0..k {
                if cur.contains(l) || cur.contains(m) {
                    continue;
                }
                if fus[l][m].iter().any(|b| cur.contains(*b)) {
                    add.insert(l);
                    add.insert(m);
                }
            }
        }
        if add.is_empty() {
            return Ok(Saturation { ideal: cur, iterations });
        }
        cur.blocks.extend(add);
        iterations += 1;
    }
}

/// Whether `ideal` is a Hopf ideal: saturated, antipode-stable, counit-free.
pub fn is_hopf_ideal(qg: &QuantumGroup, ideal: &BlockIdeal, tol: f64) -> bool {
    let k = qg.algebra().num_blocks();
    if qg.counit_block().is_none_or(|e| ideal.contains(e)) || ideal.blocks.len() == k {
        return false;
    }
    let kap = qg.kappa_block_map(tol);
    if ideal.blocks.iter().any(|&b| kap[b].iter().any(|t| !ideal.contains(*t))) {
        return false;
    }
    let fus = fusion(qg, tol);
    (0..k).all(|l| {
        (0..k).all(|m| ideal.contains(l) || ideal.contains(m) || fus[l][m].iter().all(|b| !ideal.contains(*b)))
    })
}

/// `B = A / I` with the compressed structure maps.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub group: Arc<QuantumGroup>,
    /// Blocks of `A` kept, in order; block `i` of `B` is block `surviving[i]` of `A`.
    pub surviving: Vec<usize>,
    /// `A`-coordinate of each `B` basis element.
    pub embedding: Vec<usize>,
    /// Largest component of `Delta(I)`, `epsilon(I)` or `kappa(I)` outside the ideal.
    pub residual: f64,
}

impl Quotient {
    /// `T(x)`: the surviving blocks of `x`.
    pub fn project(&self, x: &Element) -> Element {
        Element { blocks: self.surviving.iter().map(|&k| x.blocks[k].clone()).collect() }
    }
}

pub fn quotient(qg: &QuantumGroup, ideal: &BlockIdeal, tol: f64) -> Result<Quotient> {
    let alg = qg.algebra();
    let nb = alg.num_blocks();
    let surviving = ideal.surviving(nb);
    if surviving.is_empty() {
        return Err(Error::SaturationReachedFullAlgebra { iterations: 0 });
    }
    let balg = BlockAlgebra::new(surviving.iter().map(|&k| alg.sizes()[k]).collect())?;
    let embedding: Vec<usize> = (0..balg.dim())
        .map(|beta| {
            let (kb, a, b) = balg.locate(beta);
            alg.index(surviving[kb], a, b)
        })
        .collect();
    let mut back = vec![None; alg.dim()];
    for (beta, &alpha) in embedding.iter().enumerate() {
        back[alpha] = Some(beta);
    }
    let db = balg.dim();
    let mut delta = DMatrix::<C64>::zeros(db * db, db);
    let mut eps = DVector::<C64>::zeros(db);
    let mut kappa = DMatrix::<C64>::zeros(db, db);
    let mut residual = 0.0f64;
    for alpha in 0..alg.dim() {
        let col = back[alpha];
        for &(a, b, v) in qg.delta_terms(alpha) {
            if let (Some(pa), Some(pb)) = (back[a], back[b]) {
                match col {
                    Some(beta) => delta[(pa * db + pb, beta)] = v,
                    None => residual = residual.max(v.norm()),
                }
            }
        }
        match col {
            Some(beta) => eps[beta] = qg.epsilon_vector()[alpha],
            None => residual = residual.max(qg.epsilon_vector()[alpha].norm()),
        }
        for (row, &alpha_row) in embedding.iter().enumerate() {
            let v = qg.kappa_matrix()[(alpha_row, alpha)];
            match col {
                Some(beta) => kappa[(row, beta)] = v,
                None => residual = residual.max(v.norm()),
            }
        }
    }
    if residual > tol {
        return Err(Error::InvalidInput(format!("not a Hopf ideal (residual {residual:.3e})")));
    }
    let name = format!("{}/I{:?}", qg.name(), ideal.blocks.iter().collect::<Vec<_>>());
    let group = QuantumGroup::new_verified(name, balg, delta, eps, kappa, tol)?;
    Ok(Quotient { group: Arc::new(group), surviving, embedding, residual })
}

/// The action of `B = A / I` on the same space, `u_ij -> T(u_ij)`.
pub fn induced_action(action: &CoAction, q: &Quotient) -> Result<CoAction> {
    let u = action.entries().iter().map(|row| row.iter().map(|e| q.project(e)).collect()).collect();
    CoAction::new(format!("{} through {}", action.name, q.group.name()), q.group.clone(), action.space().clone(), u)
}

/// `max_a |(T (x) T) Delta_A(a) - Delta_B(T a)|` over the basis of `A`.
pub fn intertwining_residual(qg: &QuantumGroup, q: &Quotient) -> f64 {
    let alg = qg.algebra();
    let db = q.group.dim();
    let mut back = vec![None; alg.dim()];
    for (beta, &alpha) in q.embedding.iter().enumerate() {
        back[alpha] = Some(beta);
    }
    let mut worst = 0.0f64;
    for alpha in 0..alg.dim() {
        let mut lhs = DVector::<C64>::zeros(db * db);
        for &(a, b, v) in qg.delta_terms(alpha) {
            if let (Some(pa), Some(pb)) = (back[a], back[b]) {
                lhs[pa * db + pb] += v;
            }
        }
        if let Some(beta) = back[alpha] {
            lhs -= q.group.delta_matrix().column(beta);
        }
        worst = worst.max(lhs.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    worst
}

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    /// Ideal generated by the defects, before saturation.
    pub generated: BlockIdeal,
    pub ideal: BlockIdeal,
    pub iterations: usize,
    pub quotient: Quotient,
    pub induced_action: CoAction,
    pub intertwining_residual: f64,
}

impl EnvelopeResult {
    pub fn dimension(&self) -> usize {
        self.quotient.group.dim()
    }
}

pub fn envelope(action: &CoAction, tol: f64) -> Result<EnvelopeResult> {
    let qg = action.group();
    let gens = commutator_elements(action);
    let generated = generated_ideal(qg, &gens, tol);
    let sat = hopf_saturate(qg, &generated, tol)?;
    let q = quotient(qg, &sat.ideal, tol)?;
    let induced = induced_action(action, &q)?;
    let residual = intertwining_residual(qg, &q);
    Ok(EnvelopeResult {
        generated,
        ideal: sat.ideal,
        iterations: sat.iterations,
        quotient: q,
        induced_action: induced,
        intertwining_residual: residual,
    })
}

/// Every Hopf ideal, found as complements of the block sets containing the
/// counit block and closed under fusion and the antipode.
pub fn enumerate_hopf_ideals(qg: &QuantumGroup, tol: f64) -> Result<Vec<BlockIdeal>> {
    let k = qg.algebra().num_blocks();
    let counit = qg
        .counit_block()
        .ok_or_else(|| Error::InvalidInput("counit is not a character on a single block".into()))?;
    let fus = fusion(qg, tol);
    let kap = qg.kappa_block_map(tol);
    let close = |mut s: BTreeSet<usize>| -> BTreeSet<usize> {
        loop {
            let mut add: BTreeSet<usize> = BTreeSet::new();
            for &l in &s {
                add.extend(kap[l].iter().filter(|t| !s.contains(t)));
                for &m in &s {
                    add.extend(fus[l][m].iter().filter(|t| !s.contains(t)));
                }
            }
            if add.is_empty() {
                return s;
            }
            s.extend(add);
        }
    };
    let start = close(BTreeSet::from([counit]));
    let mut seen: HashSet<BTreeSet<usize>> = HashSet::from([start.clone()]);
    let mut frontier = vec![start];
    while let Some(s) = frontier.pop() {
        for b in 0..k {
            if s.contains(&b) {
                continue;
            }
            let mut t = s.clone();
            t.insert(b);
            let t = close(t);
            if seen.insert(t.clone()) {
                if seen.len() > QUOTIENT_GUARD {
                    return Err(Error::SizeGuardExceeded {
                        what: "Hopf quotient enumeration",
                        size: seen.len(),
                        limit: QUOTIENT_GUARD,
                    });
                }
                frontier.push(t);
            }
        }
    }
    let mut out: Vec<BlockIdeal> = seen
        .into_iter()
        .map(|s| BlockIdeal { blocks: (0..k).filter(|b| !s.contains(b)).collect() })
        .collect();
    out.sort_by(|a, b| a.blocks.len().cmp(&b.blocks.len()).then(a.blocks.cmp(&b.blocks)));
    Ok(out)
}

/// Every Hopf ideal, by testing all `2^K` block subsets.
pub fn enumerate_hopf_ideals_exhaustive(qg: &QuantumGroup, tol: f64) -> Result<Vec<BlockIdeal>> {
    let k = qg.algebra().num_blocks();
    if k > BRUTE_FORCE_BLOCKS {
        return Err(Error::SizeGuardExceeded { what: "block subsets", size: k, limit: BRUTE_FORCE_BLOCKS });
    }
    let mut out: Vec<BlockIdeal> = (0u32..1 << k)
        .map(|mask| BlockIdeal { blocks: (0..k).filter(|b| mask >> b & 1 == 1).collect() })
        .filter(|j| is_hopf_ideal(qg, j, tol))
        .collect();
    out.sort_by(|a, b| a.blocks.len().cmp(&b.blocks.len()).then(a.blocks.cmp(&b.blocks)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalPropertyReport {
    /// Hopf ideals examined.
    pub quotients: usize,
    /// Those whose induced action satisfies (D).
    pub isometric: usize,
    /// Isometric quotients not factoring through the envelope.
    pub failures: Vec<BlockIdeal>,
}

/// Checks that every Hopf quotient on which the action satisfies (D) factors
/// through the envelope, i.e. its ideal contains the envelope's.
pub fn verify_universal_property(
    action: &CoAction,
    env: &EnvelopeResult,
    tol: f64,
) -> Result<UniversalPropertyReport> {
    let qg = action.group();
    let ideals = enumerate_hopf_ideals(qg, tol)?;
    let mut rep = UniversalPropertyReport { quotients: ideals.len(), isometric: 0, failures: Vec::new() };
    for j in ideals {
        let q = quotient(qg, &j, tol)?;
        let induced = induced_action(action, &q)?;
        if check_d(&induced, tol).holds {
            rep.isometric += 1;
            if !env.ideal.is_subset_of(&j) {
                rep.failures.push(j);
            }
        }
    }
    Ok(rep)
}

/// Convolutions of random functionals vanishing on `ideal` vanish on it.
pub fn annihilator_convolution_check(
    qg: &QuantumGroup,
    ideal: &BlockIdeal,
    samples: usize,
    seed: u64,
    tol: f64,
) -> bool {
    let alg = qg.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let killed: Vec<usize> = ideal.blocks.iter().flat_map(|&b| alg.block_range(b)).collect();
    let random_annihilator = |rng: &mut ChaCha8Rng| {
        let mut v = DVector::from_fn(alg.dim(), |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        for &i in &killed {
            v[i] = c(0.0, 0.0);
        }
        Functional::new(v)
    };
    for _ in 0..samples {
        let phi = random_annihilator(&mut rng);
        let psi = random_annihilator(&mut rng);
        let conv = convolve_functionals(qg, &phi, &psi);
        if killed.iter().any(|&i| conv.values[i].norm() > tol) {
            return false;
        }
    }
    true
}
