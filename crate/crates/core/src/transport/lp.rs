//! Dense tableau simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! Small and exact-capable. Bland's rule on both the entering and leaving
//! choice keeps it from cycling.

use std::cmp::Ordering;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, value: S },
    Unbounded,
}

/// Solves the LP starting from the slack basis (the origin must be feasible).
pub fn maximize<S: Scalar>(c: &[S], a: &[Vec<S>], b: &[S], tol: f64) -> LpOutcome<S> {
    let m = a.len();
    let nv = c.len();
    let width = nv + m + 1;
    // tableau rows: constraints, last row: objective (reduced costs, negated)
    let mut t: Vec<Vec<S>> = Vec::with_capacity(m + 1);
    for (i, row) in a.iter().enumerate() {
        debug_assert_eq!(row.len(), nv);
        debug_assert!(b[i].sign_tol(tol) != Ordering::Less, "origin must be feasible");
        let mut r = vec![S::zero(); width];
        r[..nv].clone_from_slice(row);
        r[nv + i] = S::one();
        r[width - 1] = b[i].clone();
        t.push(r);
    }
    let mut obj = vec![S::zero(); width];
    for (j, cj) in c.iter().enumerate() {
        obj[j] = -cj.clone();
    }
    t.push(obj);
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    loop {
        let enter = (0..nv + m).find(|&j| t[m][j].sign_tol(tol) == Ordering::Less);
        let Some(e) = enter else { break };
        let mut leave: Option<(usize, S)> = None;
        for i in 0..m {
            if t[i][e].sign_tol(tol) != Ordering::Greater {
                continue;
            }
            let ratio = t[i][width - 1].clone() / t[i][e].clone();
            leave = match leave {
                None => Some((i, ratio)),
                Some((li, lr)) => match ratio.partial_cmp(&lr).expect("comparable") {
                    Ordering::Less => Some((i, ratio)),
                    Ordering::Equal if basis[i] < basis[li] => Some((i, ratio)),
                    _ => Some((li, lr)),
                },
            };
        }
        let Some((r, _)) = leave else { return LpOutcome::Unbounded };
        let piv = t[r][e].clone();
        for v in t[r].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let factor = row[e].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - factor.clone() * p.clone();
            }
        }
        basis[r] = e;
    }
    let mut x = vec![S::zero(); nv];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < nv {
            x[bv] = t[i][width - 1].clone();
        }
    }
    let value = t[m][width - 1].clone();
    LpOutcome::Optimal { x, value }
}
