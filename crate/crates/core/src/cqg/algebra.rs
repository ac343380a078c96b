//! Finite-dimensional C*-algebras `M_{n_1} + ... + M_{n_K}`.
//!
//! Elements are lists of complex blocks. The fixed basis is the list of matrix
//! units `e^k_{ab}`, block by block, row-major inside a block; coordinates
//! with respect to it are plain complex vectors, and every structure map is a
//! complex matrix acting on them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockAlgebra {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

/// An element of a [`BlockAlgebra`], one square matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub blocks: Vec<DMatrix<C64>>,
}

impl BlockAlgebra {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::ShapeMismatch(format!("invalid block sizes {sizes:?}")));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut dim = 0;
        for &s in &sizes {
            offsets.push(dim);
            dim += s * s;
        }
        Ok(BlockAlgebra { sizes, offsets, dim })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_commutative(&self) -> bool {
        self.sizes.iter().all(|&s| s == 1)
    }

    /// Coordinate index of `e^k_{ab}`.
    pub fn index(&self, k: usize, a: usize, b: usize) -> usize {
        self.offsets[k] + a * self.sizes[k] + b
    }

    /// Inverse of [`BlockAlgebra::index`].
    pub fn locate(&self, idx: usize) -> (usize, usize, usize) {
        let k = self.offsets.iter().rposition(|&o| o <= idx).expect("index in range");
        let r = idx - self.offsets[k];
        (k, r / self.sizes[k], r % self.sizes[k])
    }

    /// Coordinate range of block `k`.
    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.sizes[k] * self.sizes[k]
    }

    pub fn zero(&self) -> Element {
        Element { blocks: self.sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect() }
    }

    pub fn one(&self) -> Element {
        Element { blocks: self.sizes.iter().map(|&s| DMatrix::identity(s, s)).collect() }
    }

    pub fn basis_element(&self, idx: usize) -> Element {
        let (k, a, b) = self.locate(idx);
        let mut e = self.zero();
        e.blocks[k][(a, b)] = c(1.0, 0.0);
        e
    }

    /// Coordinates of the unit.
    pub fn unit_coords(&self) -> DVector<C64> {
        self.coords(&self.one())
    }

    pub fn coords(&self, x: &Element) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim);
        for (k, m) in x.blocks.iter().enumerate() {
            let s = self.sizes[k];
            for a in 0..s {
                for b in 0..s {
                    v[self.index(k, a, b)] = m[(a, b)];
                }
            }
        }
        v
    }

    pub fn element(&self, v: &DVector<C64>) -> Element {
        let blocks = self
            .sizes
            .iter()
            .enumerate()
            .map(|(k, &s)| DMatrix::from_fn(s, s, |a, b| v[self.index(k, a, b)]))
            .collect();
        Element { blocks }
    }

    pub fn check_shape(&self, x: &Element) -> Result<()> {
        if x.blocks.len() != self.sizes.len()
            || x.blocks.iter().zip(&self.sizes).any(|(m, &s)| m.nrows() != s || m.ncols() != s)
        {
            return Err(Error::ShapeMismatch("element does not match the block structure".into()));
        }
        Ok(())
    }

    /// Index permutation taking coordinates of `x (x) y` written as
    /// `alpha * other.dim() + beta` to coordinates in the tensor algebra.
    pub fn tensor(&self, other: &BlockAlgebra) -> (BlockAlgebra, Vec<usize>) {
        let mut sizes = Vec::new();
        for &s in &self.sizes {
            for &t in &other.sizes {
                sizes.push(s * t);
            }
        }
        let prod = BlockAlgebra::new(sizes).expect("non-empty blocks");
        let mut perm = vec![0; self.dim * other.dim];
        for alpha in 0..self.dim {
            let (k, a, b) = self.locate(alpha);
            for beta in 0..other.dim {
                let (l, cc, d) = other.locate(beta);
                let t = other.sizes[l];
                let block = k * other.num_blocks() + l;
                perm[alpha * other.dim + beta] = prod.index(block, a * t + cc, b * t + d);
            }
        }
        (prod, perm)
    }

    /// [`Element::lambda_max`] or [`Element::lambda_min`] of the element with
    /// coordinates `v`, without materializing one-dimensional blocks.
    pub fn extremal(&self, v: &DVector<C64>, largest: bool) -> Extremal {
        let mut best: Option<Extremal> = None;
        for (k, &s) in self.sizes.iter().enumerate() {
            let (value, vector) = if s == 1 {
                (v[self.offsets[k]].re, DVector::from_element(1, c(1.0, 0.0)))
            } else {
                let m = DMatrix::from_fn(s, s, |a, b| v[self.index(k, a, b)]);
                extremal_of_block(&m, largest)
            };
            let better = match &best {
                None => true,
                Some(b) => (largest && value > b.value) || (!largest && value < b.value),
            };
            if better {
                best = Some(Extremal { value, block: k, vector });
            }
        }
        best.expect("at least one block")
    }

    /// Scalar-valued evaluation of the trace on each block, summed.
    pub fn total_trace(&self, x: &Element) -> C64 {
        x.blocks.iter().map(|m| m.trace()).sum()
    }
}

impl Element {
    pub fn mul(&self, other: &Element) -> Element {
        Element { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect() }
    }

    pub fn add(&self, other: &Element) -> Element {
        Element { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Element) -> Element {
        Element { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: C64) -> Element {
        Element { blocks: self.blocks.iter().map(|a| a * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Element {
        self.scale(c(s, 0.0))
    }

    pub fn adjoint(&self) -> Element {
        Element { blocks: self.blocks.iter().map(|a| a.adjoint()).collect() }
    }

    /// Operator norm, the largest singular value over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|m| {
                if m.is_empty() || m.iter().all(|v| *v == C64::default()) {
                    0.0
                } else {
                    m.clone().singular_values().max()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Operator norm of block `k`.
    pub fn block_norm(&self, k: usize) -> f64 {
        let m = &self.blocks[k];
        if m.iter().all(|v| *v == C64::default()) {
            0.0
        } else {
            m.clone().singular_values().max()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().flat_map(|m| m.iter()).map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// Self-adjoint part `(x + x*) / 2`.
    pub fn hermitian_part(&self) -> Element {
        self.add(&self.adjoint()).scale_real(0.5)
    }

    /// Largest eigenvalue of the self-adjoint part, with the block and a unit
    /// eigenvector attaining it. Equals `max_psi psi(x)` over states.
    pub fn lambda_max(&self) -> Extremal {
        self.extremal(true)
    }

    /// Smallest eigenvalue of the self-adjoint part, `min_psi psi(x)`.
    pub fn lambda_min(&self) -> Extremal {
        self.extremal(false)
    }

    fn extremal(&self, largest: bool) -> Extremal {
        let mut best: Option<Extremal> = None;
        for (k, m) in self.blocks.iter().enumerate() {
            let (value, vector) = extremal_of_block(m, largest);
            let better = match &best {
                None => true,
                Some(b) => (largest && value > b.value) || (!largest && value < b.value),
            };
            if better {
                best = Some(Extremal { value, block: k, vector });
            }
        }
        best.expect("at least one block")
    }
}

fn extremal_of_block(m: &DMatrix<C64>, largest: bool) -> (f64, DVector<C64>) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    if h.nrows() == 1 {
        return (h[(0, 0)].re, DVector::from_element(1, c(1.0, 0.0)));
    }
    let eig = SymmetricEigen::new(h);
    let pick = if largest { eig.eigenvalues.imax() } else { eig.eigenvalues.imin() };
    (eig.eigenvalues[pick], eig.eigenvectors.column(pick).into_owned())
}

/// An extremal eigenvalue together with the vector state attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    pub value: f64,
    pub block: usize,
    pub vector: DVector<C64>,
}

/// Dimension of the span of `vectors`, by Gram-Schmidt with tolerance.
pub fn span_rank(vectors: &[DVector<C64>], tol: f64) -> usize {
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for v in vectors {
        if let Some(u) = reduce_against(&basis, v, tol) {
            basis.push(u);
        }
    }
    basis.len()
}

/// Component of `v` orthogonal to the orthonormal `basis`, normalized, or
/// `None` if its norm is below `tol` (relative to `v`).
pub fn reduce_against(basis: &[DVector<C64>], v: &DVector<C64>, tol: f64) -> Option<DVector<C64>> {
    let scale = v.norm().max(1.0);
    let mut w = v.clone();
    // two passes of classical Gram-Schmidt for stability
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
    }
    let n = w.norm();
    if n <= tol * scale {
        None
    } else {
        Some(w / c(n, 0.0))
    }
}
