//! States, functionals, convolution and the Haar state.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::algebra::{c, BlockAlgebra, Element, C64};
use super::quantum_group::QuantumGroup;
use crate::error::{Error, Result};

/// A linear functional given by its values `psi(e_alpha)` on the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub values: DVector<C64>,
}

impl Functional {
    pub fn new(values: DVector<C64>) -> Self {
        Functional { values }
    }

    pub fn eval(&self, alg: &BlockAlgebra, x: &Element) -> C64 {
        self.values.dot(&alg.coords(x))
    }

    pub fn add(&self, other: &Functional) -> Functional {
        Functional { values: &self.values + &other.values }
    }

    pub fn scale(&self, s: f64) -> Functional {
        Functional { values: &self.values * c(s, 0.0) }
    }

    pub fn distance(&self, other: &Functional) -> f64 {
        (&self.values - &other.values).camax()
    }
}

/// A state `psi(a) = sum_k tr(rho_k a_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFunctional {
    functional: Functional,
}

impl StateFunctional {
    /// Validates positivity and normalization of the block densities.
    pub fn from_densities(alg: &BlockAlgebra, densities: Vec<DMatrix<C64>>, tol: f64) -> Result<Self> {
        if densities.len() != alg.num_blocks() {
            return Err(Error::ShapeMismatch("one density per block expected".into()));
        }
        let rho = Element { blocks: densities };
        alg.check_shape(&rho)?;
        let herm = rho.sub(&rho.adjoint()).max_abs();
        if herm > tol {
            return Err(Error::InvalidInput(format!("density is not self-adjoint ({herm:.2e})")));
        }
        let low = rho.lambda_min().value;
        if low < -tol {
            return Err(Error::InvalidInput(format!("density has negative eigenvalue {low:.3e}")));
        }
        let tr = alg.total_trace(&rho);
        if (tr - c(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidInput(format!("densities have total trace {tr}")));
        }
        Ok(Self::from_densities_unchecked(alg, &rho))
    }

    fn from_densities_unchecked(alg: &BlockAlgebra, rho: &Element) -> Self {
        // psi(e^k_{ab}) = tr(rho_k e_{ab}) = (rho_k)_{ba}
        let values = DVector::from_fn(alg.dim(), |i, _| {
            let (k, a, b) = alg.locate(i);
            rho.blocks[k][(b, a)]
        });
        StateFunctional { functional: Functional { values } }
    }

    /// Wraps a functional known to be a state.
    pub fn from_functional(f: Functional) -> Self {
        StateFunctional { functional: f }
    }

    pub fn functional(&self) -> &Functional {
        &self.functional
    }

    pub fn densities(&self, alg: &BlockAlgebra) -> Vec<DMatrix<C64>> {
        alg.sizes()
            .iter()
            .enumerate()
            .map(|(k, &s)| DMatrix::from_fn(s, s, |b, a| self.functional.values[alg.index(k, a, b)]))
            .collect()
    }

    pub fn eval(&self, alg: &BlockAlgebra, x: &Element) -> C64 {
        self.functional.eval(alg, x)
    }

    /// Real part of `psi(x)`, for self-adjoint `x`.
    pub fn eval_re(&self, alg: &BlockAlgebra, x: &Element) -> f64 {
        self.eval(alg, x).re
    }

    /// The counit as a state.
    pub fn counit(qg: &QuantumGroup) -> Self {
        StateFunctional { functional: Functional { values: qg.epsilon_vector().clone() } }
    }

    /// `t * self + (1 - t) * other`.
    pub fn mix(&self, other: &StateFunctional, t: f64) -> StateFunctional {
        StateFunctional { functional: self.functional.scale(t).add(&other.functional.scale(1.0 - t)) }
    }

    /// `psi o kappa`.
    pub fn bar(&self, qg: &QuantumGroup) -> StateFunctional {
        StateFunctional { functional: compose_kappa(qg, &self.functional) }
    }
}

/// `phi o kappa`.
pub fn compose_kappa(qg: &QuantumGroup, phi: &Functional) -> Functional {
    Functional { values: qg.kappa_matrix().transpose() * &phi.values }
}

/// `(phi psi)(a) = (phi (x) psi) Delta(a)`.
pub fn convolve_functionals(qg: &QuantumGroup, phi: &Functional, psi: &Functional) -> Functional {
    let d = qg.dim();
    let values = DVector::from_fn(d, |g, _| {
        qg.delta_terms(g)
            .iter()
            .map(|&(a, b, v)| v * phi.values[a] * psi.values[b])
            .sum()
    });
    Functional { values }
}

pub fn convolve(qg: &QuantumGroup, phi: &StateFunctional, psi: &StateFunctional) -> StateFunctional {
    StateFunctional { functional: convolve_functionals(qg, &phi.functional, &psi.functional) }
}

/// The vector state `a -> <xi, a_k xi>` on block `k`.
pub fn extreme_state(alg: &BlockAlgebra, block: usize, xi: &DVector<C64>, tol: f64) -> Result<StateFunctional> {
    if block >= alg.num_blocks() || xi.len() != alg.sizes()[block] {
        return Err(Error::ShapeMismatch(format!("vector does not fit block {block}")));
    }
    let norm = xi.norm();
    if (norm - 1.0).abs() > tol.max(1e-12) {
        return Err(Error::BadVector { norm });
    }
    let mut rho = alg.zero();
    rho.blocks[block] = xi * xi.adjoint();
    Ok(StateFunctional::from_densities_unchecked(alg, &rho))
}

/// Ginibre density matrices on every block, mixed with Dirichlet weights.
pub fn random_state(alg: &BlockAlgebra, seed: u64) -> StateFunctional {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(1.0, 1.0).expect("valid shape");
    let weights: Vec<f64> = alg.sizes().iter().map(|_| gamma.sample(&mut rng)).collect();
    let total: f64 = weights.iter().sum();
    let mut rho = alg.zero();
    for (k, &s) in alg.sizes().iter().enumerate() {
        let g = DMatrix::from_fn(s, s, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c(re, im)
        });
        let w = &g * g.adjoint();
        let tr = w.trace().re;
        rho.blocks[k] = w * c(weights[k] / total / tr, 0.0);
    }
    StateFunctional::from_densities_unchecked(alg, &rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarState {
    pub state: StateFunctional,
    /// Residual of the invariance equations.
    pub residual: f64,
    /// Whether every block density is positive definite.
    pub reduced: bool,
}

/// Solves `(h (x) id) Delta(a) = h(a) 1 = (id (x) h) Delta(a)` with `h(1) = 1`.
pub fn haar_state(qg: &QuantumGroup, tol: f64) -> Result<HaarState> {
    let alg = qg.algebra();
    let d = alg.dim();
    let unit = alg.unit_coords();
    let rows = 2 * d * d + 1;
    let mut m = DMatrix::<C64>::zeros(rows, d);
    let mut rhs = DVector::<C64>::zeros(rows);
    for g in 0..d {
        for &(a, b, v) in qg.delta_terms(g) {
            // left invariance: sum_a h_a Delta_{(a,b),g} - h_g 1_b
            m[(g * d + b, a)] += v;
            // right invariance: sum_b h_b Delta_{(a,b),g} - h_g 1_a
            m[(d * d + g * d + a, b)] += v;
        }
        for beta in 0..d {
            m[(g * d + beta, g)] -= unit[beta];
            m[(d * d + g * d + beta, g)] -= unit[beta];
        }
    }
    for beta in 0..d {
        m[(rows - 1, beta)] = unit[beta];
    }
    rhs[rows - 1] = c(1.0, 0.0);
    let svd = m.clone().svd(true, true);
    let h = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidInput(format!("Haar system could not be solved: {e}")))?;
    let residual = (&m * &h - &rhs).camax();
    if residual > tol {
        return Err(Error::NoInvariantState { residual });
    }
    let state = StateFunctional::from_functional(Functional { values: h });
    let dens = state.densities(alg);
    let reduced = dens
        .iter()
        .all(|r| Element { blocks: vec![r.clone()] }.lambda_min().value > tol);
    Ok(HaarState { state, residual, reduced })
}
