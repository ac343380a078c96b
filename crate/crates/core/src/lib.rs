//! Isometric actions of finite quantum groups on finite metric spaces.
//!
//! The classical layer ([`metric`], [`transport`], [`hall`]) works over exact
//! rationals or `f64`. The quantum layer ([`cqg`], [`isometry`], [`envelope`])
//! represents finite-dimensional compact quantum groups as direct sums of
//! matrix blocks with explicit structure maps, and turns every "for all
//! states" quantifier into an extremal-eigenvalue computation.

pub mod cqg;
pub mod envelope;
pub mod error;
pub mod hall;
pub mod io;
pub mod isometry;
pub mod metric;
pub mod scalar;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::{ArithmeticMode, Rational, Scalar, DEFAULT_TOL};
