//! Arithmetic modes.
//!
//! Everything on the classical side (metrics, couplings, transport, Hall
//! feasibility, polytope vertices) is generic over [`Scalar`], implemented for
//! exact rationals ([`Rational`]) and for `f64`. Exact mode ignores tolerances;
//! float mode treats values within `tol` of each other as equal.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Default tolerance for float mode.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    #[default]
    Rational,
    Float,
}

impl std::str::FromStr for ArithmeticMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" | "exact" => Ok(ArithmeticMode::Rational),
            "float" | "f64" => Ok(ArithmeticMode::Float),
            other => Err(Error::Parse(format!("unknown arithmetic mode '{other}'"))),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Sum
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// Hashable canonical form, used to deduplicate vertices.
    type Key: Hash + Eq + Ord + Clone + Debug;

    const EXACT: bool;

    /// Exact for rationals (the binary value of the float), identity for f64.
    fn from_f64(x: f64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;

    /// Sign of `self`, treating |self| <= tol as zero in float mode.
    fn sign_tol(&self, tol: f64) -> Ordering;

    fn key(&self, tol: f64) -> Self::Key;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `self^p`; exact for integral `p` in rational mode.
    fn pow_real(&self, p: f64) -> Self;

    /// Parses `"p/q"`, integers and decimals.
    fn parse_str(s: &str) -> Result<Self>;

    fn from_usize(k: usize) -> Self {
        Self::from_ratio(k as i64, 1)
    }
}

/// `a - b` compared to zero with tolerance.
pub fn cmp_tol<S: Scalar>(a: &S, b: &S, tol: f64) -> Ordering {
    (a.clone() - b.clone()).sign_tol(tol)
}

pub fn eq_tol<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    cmp_tol(a, b, tol) == Ordering::Equal
}

pub fn le_tol<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    cmp_tol(a, b, tol) != Ordering::Greater
}

pub fn lt_tol<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    cmp_tol(a, b, tol) == Ordering::Less
}

pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

pub fn min_of<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

impl Scalar for f64 {
    type Key = i64;

    const EXACT: bool = false;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sign_tol(&self, tol: f64) -> Ordering {
        if *self > tol {
            Ordering::Greater
        } else if *self < -tol {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }

    fn key(&self, tol: f64) -> i64 {
        let q = if tol > 0.0 { tol } else { 1e-12 };
        (*self / q).round() as i64
    }

    fn pow_real(&self, p: f64) -> Self {
        if p == 1.0 {
            *self
        } else {
            self.powf(p)
        }
    }

    fn parse_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))?;
            let d: f64 = d.trim().parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))?;
            if d == 0.0 {
                return Err(Error::Parse(format!("zero denominator in '{s}'")));
            }
            Ok(n / d)
        } else {
            s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
        }
    }
}

impl Scalar for Rational {
    type Key = Rational;

    const EXACT: bool = true;

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn sign_tol(&self, _tol: f64) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }

    fn key(&self, _tol: f64) -> Rational {
        self.clone()
    }

    fn pow_real(&self, p: f64) -> Self {
        if p.fract() == 0.0 && p >= 0.0 && p <= i32::MAX as f64 {
            num_traits::pow::Pow::pow(self, p as i32)
        } else {
            Self::from_f64(Scalar::to_f64(self).powf(p))
        }
    }

    fn parse_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad rational '{s}'"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        } else if let Some((int, frac)) = s.split_once('.') {
            // decimal literal, read exactly
            let neg = int.trim_start().starts_with('-');
            let digits = frac.len() as u32;
            let int_part: BigInt = if int.is_empty() || int == "-" {
                BigInt::zero()
            } else {
                int.parse().map_err(|_| bad())?
            };
            let frac_part: BigInt = if frac.is_empty() {
                BigInt::zero()
            } else {
                frac.parse().map_err(|_| bad())?
            };
            let scale = num_traits::pow::Pow::pow(BigInt::from(10), digits);
            let mag = int_part.abs() * &scale + frac_part;
            let num = if neg { -mag } else { mag };
            Ok(BigRational::new(num, scale))
        } else {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with pivoting on
/// the first entry of largest magnitude. Returns `None` when singular.
pub fn solve_linear<S: Scalar>(a: &[Vec<S>], b: &[S], tol: f64) -> Option<Vec<S>> {
    let n = a.len();
    let mut m: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let mut piv = None;
        let mut best = S::zero();
        for (r, row) in m.iter().enumerate().skip(col) {
            let v = row[col].abs();
            if v.sign_tol(tol) != Ordering::Equal && (piv.is_none() || v > best) {
                best = v;
                piv = Some(r);
                if S::EXACT {
                    break;
                }
            }
        }
        let p = piv?;
        m.swap(col, p);
        let pivot = m[col][col].clone();
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone() / pivot.clone();
            for c in col..=n {
                let delta = factor.clone() * m[col][c].clone();
                m[r][c] = m[r][c].clone() - delta;
            }
        }
    }
    Some((0..n).map(|i| m[i][n].clone() / m[i][i].clone()).collect())
}
