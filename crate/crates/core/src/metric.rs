//! Finite metric spaces, balls, level sets and Lipschitz constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{eq_tol, le_tol, lt_tol, Scalar, DEFAULT_TOL};

/// A finite metric space on the points `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace<S: Scalar> {
    dist: Vec<Vec<S>>,
    labels: Option<Vec<String>>,
    tol: f64,
    /// Sorted distinct distances, including 0.
    realized: Vec<S>,
}

/// A subset of `X x X`, stored densely.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairSet {
    n: usize,
    mask: Vec<bool>,
}

impl PairSet {
    pub fn empty(n: usize) -> Self {
        PairSet { n, mask: vec![false; n * n] }
    }

    pub fn full(n: usize) -> Self {
        PairSet { n, mask: vec![true; n * n] }
    }

    pub fn diagonal(n: usize) -> Self {
        let mut y = Self::empty(n);
        for i in 0..n {
            y.insert(i, i);
        }
        y
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut y = Self::empty(n);
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("pair ({i},{j}) out of range for n = {n}")));
            }
            y.insert(i, j);
        }
        Ok(y)
    }

    /// Bit `i * n + j` of `bits` decides membership of `(i, j)`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        let mask = (0..n * n).map(|k| bits >> k & 1 == 1).collect();
        PairSet { n, mask }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        self.mask[i * self.n + j] = true;
    }

    pub fn remove(&mut self, i: usize, j: usize) {
        self.mask[i * self.n + j] = false;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::empty(self.n);
        for (i, j) in self.pairs() {
            t.insert(j, i);
        }
        t
    }

    pub fn is_subset_of(&self, other: &PairSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !a || *b)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(k, _)| (k / n, k % n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricModel {
    /// Pairwise distances of random points in the unit square.
    EuclideanSample,
    /// All-pairs shortest paths of a random connected graph with integer weights.
    ShortestPathGraph,
}

impl std::str::FromStr for MetricModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean-sample" | "euclidean" => Ok(MetricModel::EuclideanSample),
            "shortest-path-graph" | "graph" => Ok(MetricModel::ShortestPathGraph),
            other => Err(Error::Parse(format!("unknown metric model '{other}'"))),
        }
    }
}

/// Checks the metric axioms and builds the space.
///
/// Checks run in this order: shape, diagonal, sign, symmetry, separation,
/// triangle inequality. The first failure is reported with a witness.
pub fn validate_metric<S: Scalar>(matrix: Vec<Vec<S>>, tol: f64) -> Result<FiniteMetricSpace<S>> {
    let n = matrix.len();
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare { rows: n, row, len: r.len() });
        }
    }
    if n == 0 {
        return Err(Error::InvalidInput("metric space must have at least one point".into()));
    }
    let zero = S::zero();
    for i in 0..n {
        if !eq_tol(&matrix[i][i], &zero, tol) {
            return Err(Error::NonzeroDiagonal { i });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if lt_tol(&matrix[i][j], &zero, tol) {
                return Err(Error::NegativeDistance { i, j });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if !eq_tol(&matrix[i][j], &matrix[j][i], tol) {
                return Err(Error::AsymmetricMatrix { i, j });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if eq_tol(&matrix[i][j], &zero, tol) {
                return Err(Error::ZeroDistance { i, j });
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                let via = matrix[i][j].clone() + matrix[j][k].clone();
                if !le_tol(&matrix[i][k], &via, tol) {
                    return Err(Error::TriangleViolation { i, j, k });
                }
            }
        }
    }
    // symmetrize exactly so later code can rely on dist[i][j] == dist[j][i]
    let mut dist = matrix;
    for i in 0..n {
        dist[i][i] = S::zero();
        for j in 0..i {
            dist[i][j] = dist[j][i].clone();
        }
    }
    let realized = realized_values(&dist, tol);
    Ok(FiniteMetricSpace { dist, labels: None, tol, realized })
}

fn realized_values<S: Scalar>(dist: &[Vec<S>], tol: f64) -> Vec<S> {
    let mut all: Vec<S> = dist.iter().flat_map(|r| r.iter().cloned()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("comparable distances"));
    let mut out: Vec<S> = Vec::new();
    for v in all {
        if out.last().map_or(true, |last| !eq_tol(last, &v, tol)) {
            out.push(v);
        }
    }
    out
}

impl<S: Scalar> FiniteMetricSpace<S> {
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.dist.len()
    }

    pub fn d(&self, i: usize, j: usize) -> &S {
        &self.dist[i][j]
    }

    pub fn dist(&self) -> &[Vec<S>] {
        &self.dist
    }

    /// The function `d_x = d(x, .)`.
    pub fn row(&self, x: usize) -> &[S] {
        &self.dist[x]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn realized_distances(&self) -> &[S] {
        &self.realized
    }

    pub fn max_distance(&self) -> S {
        self.realized.last().cloned().unwrap_or_else(S::zero)
    }

    /// Entrywise `d^p`.
    pub fn cost_matrix(&self, p: f64) -> Vec<Vec<S>> {
        self.dist
            .iter()
            .map(|r| r.iter().map(|v| v.pow_real(p)).collect())
            .collect()
    }

    pub fn to_f64(&self) -> FiniteMetricSpace<f64> {
        let dist: Vec<Vec<f64>> = self.dist.iter().map(|r| r.iter().map(|v| v.to_f64()).collect()).collect();
        let tol = if S::EXACT { DEFAULT_TOL } else { self.tol };
        FiniteMetricSpace {
            realized: realized_values(&dist, tol),
            dist,
            labels: self.labels.clone(),
            tol,
        }
    }
}

/// `L(f) = max_{i != j} |f_i - f_j| / d(i, j)`.
pub fn lipschitz_constant<S: Scalar>(space: &FiniteMetricSpace<S>, f: &[S]) -> Result<S> {
    let n = space.n();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let mut best = S::zero();
    for i in 0..n {
        for j in i + 1..n {
            let r = (f[i].clone() - f[j].clone()).abs() / space.d(i, j).clone();
            if r > best {
                best = r;
            }
        }
    }
    Ok(best)
}

/// `{j : lo <= d(x, j) <= hi}`.
pub fn ball<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, lo: &S, hi: &S) -> Vec<usize> {
    let tol = space.tol();
    (0..space.n())
        .filter(|&j| le_tol(lo, space.d(x, j), tol) && le_tol(space.d(x, j), hi, tol))
        .collect()
}

/// `{(i, j) : d(i, j) = r}`.
pub fn level_set<S: Scalar>(space: &FiniteMetricSpace<S>, r: &S) -> PairSet {
    let n = space.n();
    let mut y = PairSet::empty(n);
    for i in 0..n {
        for j in 0..n {
            if eq_tol(space.d(i, j), r, space.tol()) {
                y.insert(i, j);
            }
        }
    }
    y
}

/// `{(i, j) : d(i, j) <= r}`.
pub fn sublevel_set<S: Scalar>(space: &FiniteMetricSpace<S>, r: &S) -> PairSet {
    let n = space.n();
    let mut y = PairSet::empty(n);
    for i in 0..n {
        for j in 0..n {
            if le_tol(space.d(i, j), r, space.tol()) {
                y.insert(i, j);
            }
        }
    }
    y
}

/// A reproducible random metric on `n` points.
///
/// Euclidean samples use coordinates on a 1/64 grid so that the rational
/// image of every distance is exact; in the rare event that rounding breaks
/// a triangle inequality exactly, the sample is redrawn from the next seed.
pub fn random_metric_space<S: Scalar>(n: usize, seed: u64, model: MetricModel) -> Result<FiniteMetricSpace<S>> {
    if n < 2 {
        return Err(Error::InvalidInput("random metric spaces need n >= 2".into()));
    }
    match model {
        MetricModel::EuclideanSample => {
            for attempt in 0..64u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
                let pts: Vec<(f64, f64)> = (0..n)
                    .map(|_| {
                        let x = rng.random_range(0..=64) as f64 / 64.0;
                        let y = rng.random_range(0..=64) as f64 / 64.0;
                        (x, y)
                    })
                    .collect();
                let mut m = vec![vec![S::zero(); n]; n];
                for i in 0..n {
                    for j in i + 1..n {
                        let v = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
                        m[i][j] = S::from_f64(v);
                        m[j][i] = S::from_f64(v);
                    }
                }
                // exact-mode check; float mode uses the default tolerance
                if let Ok(space) = validate_metric(m, if S::EXACT { 0.0 } else { DEFAULT_TOL }) {
                    return Ok(space);
                }
            }
            Err(Error::InvalidInput("could not sample a Euclidean metric".into()))
        }
        MetricModel::ShortestPathGraph => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            const INF: u64 = u64::MAX / 4;
            let mut w = vec![vec![INF; n]; n];
            for (i, row) in w.iter_mut().enumerate() {
                row[i] = 0;
            }
            // random spanning tree plus extra edges
            for v in 1..n {
                let u = rng.random_range(0..v);
                let wt = rng.random_range(1..=9u64);
                w[u][v] = wt;
                w[v][u] = wt;
            }
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(0.3) {
                        let wt = rng.random_range(1..=9u64);
                        w[i][j] = w[i][j].min(wt);
                        w[j][i] = w[i][j];
                    }
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = w[i][k] + w[k][j];
                        if via < w[i][j] {
                            w[i][j] = via;
                        }
                    }
                }
            }
            let m = w
                .iter()
                .map(|r| r.iter().map(|&v| S::from_ratio(v as i64, 1)).collect())
                .collect();
            validate_metric(m, if S::EXACT { 0.0 } else { DEFAULT_TOL })
        }
    }
}
