//! Hall's condition for couplings with prescribed support, and the marriage
//! theorem as its uniform special case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::PairSet;
use crate::scalar::{lt_tol, Rational, Scalar};
use crate::transport::{feasible_coupling_on, Coupling, CouplingOutcome, HallViolation, ProbVector};

/// Largest `n` for which the subset condition is checked by exhaustion.
pub const SUBSET_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct HallInstance<S> {
    pub mu: ProbVector<S>,
    pub nu: ProbVector<S>,
    pub pairs: PairSet,
}

impl<S: Scalar> HallInstance<S> {
    pub fn new(mu: ProbVector<S>, nu: ProbVector<S>, pairs: PairSet) -> Result<Self> {
        let n = mu.len();
        for got in [nu.len(), pairs.n()] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        Ok(HallInstance { mu, nu, pairs })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HallVerdict<S> {
    pub feasible: bool,
    pub coupling: Option<Coupling<S>>,
    pub violator: Option<HallViolation<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Forward: `{x' : (x, x') in Y for some x in S}`. Backward: `{x' : (x', x) in Y}`.
pub fn neighborhood(y: &PairSet, subset: &[usize], direction: Direction) -> Vec<usize> {
    let n = y.n();
    (0..n)
        .filter(|&t| {
            subset.iter().any(|&s| match direction {
                Direction::Forward => y.contains(s, t),
                Direction::Backward => y.contains(t, s),
            })
        })
        .collect()
}

fn mask_to_set(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Checks `nu(N(S)) >= mu(S)` for every subset `S`.
///
/// Subsets are visited in decreasing lexicographic order of their indicator
/// vectors `(1_S(0), ..., 1_S(n-1))`, starting from the whole space, and the
/// first violator is returned.
pub fn hall_condition<S: Scalar>(inst: &HallInstance<S>, tol: f64) -> Result<(bool, Option<HallViolation<S>>)> {
    let n = inst.mu.len();
    if n > SUBSET_GUARD {
        return Err(Error::SizeGuardExceeded { what: "Hall subset exhaustion", size: n, limit: SUBSET_GUARD });
    }
    // forward neighbourhood of each point as a bitmask
    let nbr: Vec<u64> = (0..n)
        .map(|i| (0..n).filter(|&j| inst.pairs.contains(i, j)).fold(0u64, |m, j| m | 1 << j))
        .collect();
    for code in (1u64..(1u64 << n)).rev() {
        // point i is bit n-1-i of the code
        let mask = (0..n).filter(|&i| code >> (n - 1 - i) & 1 == 1).fold(0u64, |m, i| m | 1 << i);
        let mut reach = 0u64;
        let mut mu_s = S::zero();
        for i in 0..n {
            if mask >> i & 1 == 1 {
                reach |= nbr[i];
                mu_s = mu_s + inst.mu.mass()[i].clone();
            }
        }
        let nu_n: S = (0..n)
            .filter(|&j| reach >> j & 1 == 1)
            .map(|j| inst.nu.mass()[j].clone())
            .sum();
        if lt_tol(&nu_n, &mu_s, tol) {
            return Ok((
                false,
                Some(HallViolation {
                    subset: mask_to_set(mask, n),
                    neighborhood: mask_to_set(reach, n),
                    mu_of_subset: mu_s,
                    nu_of_neighborhood: nu_n,
                }),
            ));
        }
    }
    Ok((true, None))
}

/// Decides coupling existence by max-flow; each branch carries a certificate.
pub fn decide_hall<S: Scalar>(inst: &HallInstance<S>, tol: f64) -> Result<HallVerdict<S>> {
    Ok(match feasible_coupling_on(&inst.mu, &inst.nu, &inst.pairs, tol)? {
        CouplingOutcome::Feasible(c) => HallVerdict { feasible: true, coupling: Some(c), violator: None },
        CouplingOutcome::Infeasible(v) => HallVerdict { feasible: false, coupling: None, violator: Some(v) },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchingOutcome {
    /// `matching[i]` is the right vertex matched to left vertex `i`.
    Perfect(Vec<usize>),
    /// A left set with fewer neighbours than members.
    Deficient { subset: Vec<usize>, neighborhood: Vec<usize> },
}

/// Perfect matching through the uniform coupling problem.
///
/// With all masses `1/n` every augmenting step moves a multiple of `1/n`, so
/// each arc carries either nothing or a full unit and the plan is a
/// permutation matrix scaled by `1/n`.
pub fn perfect_matching(adjacency: &[Vec<bool>]) -> Result<MatchingOutcome> {
    let n = adjacency.len();
    for row in adjacency {
        if row.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "bipartition sides differ: {n} left vertices, a row with {} entries",
                row.len()
            )));
        }
    }
    // the coupling of a complete graph is the product, not a permutation
    if adjacency.iter().all(|row| row.iter().all(|&e| e)) {
        return Ok(MatchingOutcome::Perfect((0..n).collect()));
    }
    let mut y = PairSet::empty(n);
    for (i, row) in adjacency.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e {
                y.insert(i, j);
            }
        }
    }
    let uniform = ProbVector::<Rational>::uniform(n);
    let inst = HallInstance::new(uniform.clone(), uniform, y)?;
    let verdict = decide_hall(&inst, 0.0)?;
    if let Some(c) = verdict.coupling {
        let matching = c
            .plan()
            .iter()
            .map(|row| row.iter().position(|v| !num_traits::Zero::is_zero(v)).expect("row carries mass 1/n"))
            .collect();
        Ok(MatchingOutcome::Perfect(matching))
    } else {
        let v = verdict.violator.expect("infeasible verdicts carry a violator");
        Ok(MatchingOutcome::Deficient { subset: v.subset, neighborhood: v.neighborhood })
    }
}
