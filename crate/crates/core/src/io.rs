//! JSON file formats.
//!
//! Reals may be JSON numbers or strings (`"3/4"`, `"0.25"`, `"2"`); strings
//! are read exactly in rational mode. Complex numbers are `[re, im]` pairs or
//! plain reals.
//!
//! - metric: `{"n": 3, "dist": [[...]], "labels": [...]}` (`n`, `labels` optional)
//! - distribution: `{"mass": [...]}`
//! - Hall instance: `{"mu": [...], "nu": [...], "pairs": [[i, j], ...]}`
//! - quantum group: `{"name", "blocks": [1, 1, 2], "basis", "delta", "epsilon", "kappa"}`
//!   where `basis` (optional, default: matrix units block by block, row-major)
//!   lists each basis element as its list of complex blocks, `delta` is the
//!   `dim^2 x dim` matrix whose column `g` holds `Delta(b_g)` in the basis
//!   `b_a (x) b_b` at row `a * dim + b`, `epsilon` the values on the basis and
//!   `kappa` the `dim x dim` matrix of the antipode
//! - coaction: `{"name", "group": <path or object>, "space": <path or object>, "u": n x n
//!   array of coefficient vectors in the group's basis}`; paths are relative
//!   to the coaction file
//! - state: `{"densities": [complex matrix per block]}`

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::cqg::algebra::{c, BlockAlgebra, Element, C64};
use crate::cqg::coaction::CoAction;
use crate::cqg::quantum_group::QuantumGroup;
use crate::cqg::state::StateFunctional;
use crate::error::{Error, Result};
use crate::hall::HallInstance;
use crate::metric::{validate_metric, FiniteMetricSpace, PairSet};
use crate::scalar::Scalar;
use crate::transport::ProbVector;

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| bad(format!("missing field \"{key}\"")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| bad(format!("{what} must be an array")))
}

pub fn parse_real<S: Scalar>(v: &Value) -> Result<S> {
    match v {
        Value::String(s) => S::parse_str(s),
        Value::Number(n) => S::parse_str(&n.to_string()),
        _ => Err(bad(format!("expected a number, got {v}"))),
    }
}

fn parse_reals<S: Scalar>(v: &Value, what: &str) -> Result<Vec<S>> {
    array(v, what)?.iter().map(parse_real).collect()
}

fn parse_index(v: &Value) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| bad(format!("expected an index, got {v}")))
}

pub fn parse_complex(v: &Value) -> Result<C64> {
    match v {
        Value::Array(parts) if parts.len() == 2 => Ok(c(parse_real(&parts[0])?, parse_real(&parts[1])?)),
        Value::Array(_) => Err(bad("complex numbers are [re, im] pairs")),
        other => Ok(c(parse_real(other)?, 0.0)),
    }
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn parse_complex_vector(v: &Value, what: &str) -> Result<DVector<C64>> {
    let items: Vec<C64> = array(v, what)?.iter().map(parse_complex).collect::<Result<_>>()?;
    Ok(DVector::from_vec(items))
}

fn parse_complex_matrix(v: &Value, what: &str) -> Result<DMatrix<C64>> {
    let rows = array(v, what)?;
    let parsed: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| array(r, what)?.iter().map(parse_complex).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let nrows = parsed.len();
    let ncols = parsed.first().map_or(0, |r| r.len());
    if parsed.iter().any(|r| r.len() != ncols) {
        return Err(bad(format!("{what} has ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| parsed[i][j]))
}

fn matrix_json(m: &DMatrix<C64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())).collect())
}

fn vector_json(v: &DVector<C64>) -> Value {
    Value::Array(v.iter().map(|z| complex_json(*z)).collect())
}

// ---------------------------------------------------------------- metric

pub fn metric_from_json<S: Scalar>(v: &Value, tol: f64) -> Result<FiniteMetricSpace<S>> {
    let rows = array(field(v, "dist")?, "dist")?;
    let matrix: Vec<Vec<S>> = rows.iter().map(|r| parse_reals(r, "dist row")).collect::<Result<_>>()?;
    if let Some(n) = v.get("n") {
        let n = parse_index(n)?;
        if n != matrix.len() {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.len() });
        }
    }
    let space = validate_metric(matrix, tol)?;
    match v.get("labels") {
        Some(l) => {
            let labels = array(l, "labels")?
                .iter()
                .map(|s| s.as_str().map(String::from).ok_or_else(|| bad("labels must be strings")))
                .collect::<Result<_>>()?;
            space.with_labels(labels)
        }
        None => Ok(space),
    }
}

pub fn metric_to_json<S: Scalar>(space: &FiniteMetricSpace<S>) -> Value {
    let dist: Vec<Vec<String>> = space.dist().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
    let mut v = json!({"n": space.n(), "dist": dist});
    if let Some(l) = space.labels() {
        v["labels"] = json!(l);
    }
    v
}

pub fn read_metric<S: Scalar>(path: &Path, tol: f64) -> Result<FiniteMetricSpace<S>> {
    metric_from_json(&read_json(path)?, tol)
}

// ---------------------------------------------------------------- measures

pub fn distribution_from_json<S: Scalar>(v: &Value, tol: f64) -> Result<ProbVector<S>> {
    ProbVector::new(parse_reals(field(v, "mass")?, "mass")?, tol)
}

pub fn read_distribution<S: Scalar>(path: &Path, tol: f64) -> Result<ProbVector<S>> {
    distribution_from_json(&read_json(path)?, tol)
}

pub fn hall_from_json<S: Scalar>(v: &Value, tol: f64) -> Result<HallInstance<S>> {
    let mu: ProbVector<S> = ProbVector::new(parse_reals(field(v, "mu")?, "mu")?, tol)?;
    let nu = ProbVector::new(parse_reals(field(v, "nu")?, "nu")?, tol)?;
    let pairs: Vec<(usize, usize)> = array(field(v, "pairs")?, "pairs")?
        .iter()
        .map(|p| match p.as_array().map(|a| a.as_slice()) {
            Some([i, j]) => Ok((parse_index(i)?, parse_index(j)?)),
            _ => Err(bad("pairs are [i, j]")),
        })
        .collect::<Result<_>>()?;
    let y = PairSet::from_pairs(mu.len(), &pairs)?;
    HallInstance::new(mu, nu, y)
}

pub fn read_hall<S: Scalar>(path: &Path, tol: f64) -> Result<HallInstance<S>> {
    hall_from_json(&read_json(path)?, tol)
}

// ---------------------------------------------------------------- quantum groups

/// A quantum group together with the basis its file was written in.
#[derive(Debug, Clone)]
pub struct LoadedGroup {
    pub group: QuantumGroup,
    /// Columns: matrix-unit coordinates of the file's basis elements.
    pub basis: DMatrix<C64>,
}

impl LoadedGroup {
    /// Element with coefficients `coeffs` in the file's basis.
    pub fn element(&self, coeffs: &DVector<C64>) -> Element {
        self.group.algebra().element(&(&self.basis * coeffs))
    }
}

pub fn quantum_group_from_json(v: &Value, tol: f64) -> Result<LoadedGroup> {
    let sizes: Vec<usize> = array(field(v, "blocks")?, "blocks")?.iter().map(parse_index).collect::<Result<_>>()?;
    let alg = BlockAlgebra::new(sizes)?;
    let d = alg.dim();
    let basis = match v.get("basis") {
        None => DMatrix::identity(d, d),
        Some(b) => {
            let elems = array(b, "basis")?;
            if elems.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: elems.len() });
            }
            let mut cols = Vec::with_capacity(d);
            for e in elems {
                let blocks: Vec<DMatrix<C64>> =
                    array(e, "basis element")?.iter().map(|m| parse_complex_matrix(m, "block")).collect::<Result<_>>()?;
                let el = Element { blocks };
                alg.check_shape(&el)?;
                cols.push(alg.coords(&el));
            }
            DMatrix::from_columns(&cols)
        }
    };
    let pinv = basis.clone().try_inverse().ok_or_else(|| bad("basis is not linearly independent"))?;
    let delta_file = parse_complex_matrix(field(v, "delta")?, "delta")?;
    let eps_file = parse_complex_vector(field(v, "epsilon")?, "epsilon")?;
    let kappa_file = parse_complex_matrix(field(v, "kappa")?, "kappa")?;
    if delta_file.shape() != (d * d, d) || eps_file.len() != d || kappa_file.shape() != (d, d) {
        return Err(Error::ShapeMismatch(format!("structure maps do not match dimension {d}")));
    }
    // change to matrix units: Delta = (P (x) P) Delta_file P^-1 etc.
    let pp = basis.kronecker(&basis);
    let delta = &pp * &delta_file * &pinv;
    let epsilon = (eps_file.transpose() * &pinv).transpose();
    let kappa = &basis * &kappa_file * &pinv;
    let name = v.get("name").and_then(Value::as_str).unwrap_or("A").to_string();
    let group = QuantumGroup::new_verified(name, alg, delta, epsilon, kappa, tol)?;
    Ok(LoadedGroup { group, basis })
}

/// Writes `qg` in the matrix-unit basis.
pub fn quantum_group_to_json(qg: &QuantumGroup) -> Value {
    let alg = qg.algebra();
    let basis: Vec<Value> = (0..alg.dim())
        .map(|i| Value::Array(alg.basis_element(i).blocks.iter().map(matrix_json).collect()))
        .collect();
    json!({
        "name": qg.name(),
        "blocks": alg.sizes(),
        "basis": basis,
        "delta": matrix_json(qg.delta_matrix()),
        "epsilon": vector_json(qg.epsilon_vector()),
        "kappa": matrix_json(qg.kappa_matrix()),
    })
}

pub fn read_quantum_group(path: &Path, tol: f64) -> Result<LoadedGroup> {
    quantum_group_from_json(&read_json(path)?, tol)
}

// ---------------------------------------------------------------- coactions

fn resolve(v: &Value, base: Option<&Path>) -> Result<Value> {
    match v {
        Value::String(p) => {
            let path = match base {
                Some(b) => b.join(p),
                None => PathBuf::from(p),
            };
            read_json(&path)
        }
        other => Ok(other.clone()),
    }
}

/// Reads a coaction; `base` resolves relative paths to the group and space files.
pub fn coaction_from_json(v: &Value, base: Option<&Path>, tol: f64) -> Result<CoAction> {
    let loaded = quantum_group_from_json(&resolve(field(v, "group")?, base)?, tol)?;
    let space: FiniteMetricSpace<f64> = metric_from_json(&resolve(field(v, "space")?, base)?, tol)?;
    let n = space.n();
    let rows = array(field(v, "u")?, "u")?;
    if rows.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rows.len() });
    }
    let mut u = Vec::with_capacity(n);
    for r in rows {
        let entries = array(r, "u row")?;
        if entries.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: entries.len() });
        }
        let row = entries
            .iter()
            .map(|e| {
                let coeffs = parse_complex_vector(e, "u entry")?;
                if coeffs.len() != loaded.group.dim() {
                    return Err(Error::DimensionMismatch { expected: loaded.group.dim(), got: coeffs.len() });
                }
                Ok(loaded.element(&coeffs))
            })
            .collect::<Result<Vec<_>>>()?;
        u.push(row);
    }
    let name = v.get("name").and_then(Value::as_str).unwrap_or("action").to_string();
    CoAction::new(name, Arc::new(loaded.group), space, u)
}

pub fn read_coaction(path: &Path, tol: f64) -> Result<CoAction> {
    coaction_from_json(&read_json(path)?, path.parent(), tol)
}

/// Writes the action with the group and space inlined.
pub fn coaction_to_json(action: &CoAction) -> Value {
    let alg = action.group().algebra();
    let u: Vec<Vec<Value>> = action
        .entries()
        .iter()
        .map(|row| row.iter().map(|e| vector_json(&alg.coords(e))).collect())
        .collect();
    json!({
        "name": action.name,
        "group": quantum_group_to_json(action.group()),
        "space": metric_to_json(action.space()),
        "u": u,
    })
}

// ---------------------------------------------------------------- states

pub fn state_from_json(v: &Value, alg: &BlockAlgebra, tol: f64) -> Result<StateFunctional> {
    let dens: Vec<DMatrix<C64>> =
        array(field(v, "densities")?, "densities")?.iter().map(|m| parse_complex_matrix(m, "density")).collect::<Result<_>>()?;
    StateFunctional::from_densities(alg, dens, tol)
}

pub fn state_to_json(psi: &StateFunctional, alg: &BlockAlgebra) -> Value {
    json!({"densities": psi.densities(alg).iter().map(matrix_json).collect::<Vec<_>>()})
}

pub fn read_state(path: &Path, alg: &BlockAlgebra, tol: f64) -> Result<StateFunctional> {
    state_from_json(&read_json(path)?, alg, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cqg::catalog::builtin_catalog;
    use crate::cqg::state::random_state;
    use crate::scalar::Rational;

    #[test]
    fn metric_round_trip_is_exact() {
        let v: Value = serde_json::from_str(r#"{"n": 3, "dist": [["0","1/3",1],["1/3",0,"2/3"],[1,"2/3","0"]]}"#).unwrap();
        let m: FiniteMetricSpace<Rational> = metric_from_json(&v, 1e-9).unwrap();
        assert_eq!(m.d(0, 1), &Rational::new(1.into(), 3.into()));
        let back: FiniteMetricSpace<Rational> = metric_from_json(&metric_to_json(&m), 1e-9).unwrap();
        assert_eq!(back.dist(), m.dist());
    }

    #[test]
    fn coaction_round_trip() {
        for entry in builtin_catalog().unwrap().iter().take(6) {
            let v = coaction_to_json(&entry.action);
            let back = coaction_from_json(&v, None, 1e-9).unwrap();
            assert_eq!(back.entries(), entry.action.entries());
            assert_eq!(back.group().delta_matrix(), entry.action.group().delta_matrix());
        }
    }

    #[test]
    fn change_of_basis_is_undone() {
        let entry = &builtin_catalog().unwrap()[5];
        let qg = entry.action.group();
        let alg = qg.algebra();
        let d = alg.dim();
        // basis b_g = e_g + e_0 for g > 0, b_0 = e_0
        let p = DMatrix::from_fn(d, d, |i, j| if i == j || (i == 0) { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let pinv = p.clone().try_inverse().unwrap();
        let mut v = quantum_group_to_json(qg);
        v["basis"] = Value::Array(
            (0..d).map(|j| Value::Array(alg.element(&p.column(j).into_owned()).blocks.iter().map(matrix_json).collect())).collect(),
        );
        v["delta"] = matrix_json(&(pinv.kronecker(&pinv) * qg.delta_matrix() * &p));
        v["epsilon"] = vector_json(&(qg.epsilon_vector().transpose() * &p).transpose());
        v["kappa"] = matrix_json(&(&pinv * qg.kappa_matrix() * &p));
        let back = quantum_group_from_json(&v, 1e-9).unwrap();
        assert!((back.group.delta_matrix() - qg.delta_matrix()).camax() < 1e-12);
        assert!((back.group.kappa_matrix() - qg.kappa_matrix()).camax() < 1e-12);
    }

    #[test]
    fn state_round_trip() {
        let entry = &builtin_catalog().unwrap()[0];
        let alg = entry.action.group().algebra();
        let psi = random_state(alg, 3);
        let back = state_from_json(&state_to_json(&psi, alg), alg, 1e-9).unwrap();
        assert!(back.functional().distance(psi.functional()) < 1e-12);
    }

    #[test]
    fn malformed_input_is_rejected() {
        let v: Value = serde_json::from_str(r#"{"dist": [[0, 1], [1]]}"#).unwrap();
        assert!(metric_from_json::<f64>(&v, 1e-9).is_err());
        let v: Value = serde_json::from_str(r#"{"mass": ["1/2", "x"]}"#).unwrap();
        assert!(distribution_from_json::<Rational>(&v, 1e-9).is_err());
    }
}
