use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },

    #[error("distance matrix is asymmetric at ({i}, {j})")]
    AsymmetricMatrix { i: usize, j: usize },

    #[error("negative distance at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize },

    #[error("nonzero diagonal entry at {i}")]
    NonzeroDiagonal { i: usize },

    #[error("distinct points {i} and {j} are at distance zero")]
    ZeroDistance { i: usize, j: usize },

    #[error("triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("marginals have different total mass ({mu} vs {nu})")]
    InfeasibleMarginals { mu: String, nu: String },

    #[error("size guard exceeded for {what}: size {size} > limit {limit}")]
    SizeGuardExceeded { what: &'static str, size: usize, limit: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no invariant state exists (residual {residual:.3e})")]
    NoInvariantState { residual: f64 },

    #[error("antipode is not of Kac type (residual {residual:.3e})")]
    KacViolation { residual: f64 },

    #[error("orbit relation is not a partition (points {x}, {y})")]
    NotAPartition { x: usize, y: usize },

    #[error("vector is not a unit vector (norm {norm})")]
    BadVector { norm: f64 },

    #[error("not a group: {0}")]
    NotAGroup(String),

    #[error("inconsistent irreducible representation data: {0}")]
    InconsistentIrreps(String),

    #[error("antipode does not send u_ij to u_ji (residual {residual:.3e})")]
    KappaConventionMismatch { residual: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("Hopf saturation reached the full algebra after {iterations} rounds")]
    SaturationReachedFullAlgebra { iterations: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
