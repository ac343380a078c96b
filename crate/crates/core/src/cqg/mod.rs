//! Compact quantum groups on finite-dimensional C*-algebras and their
//! actions on finite metric spaces.

pub mod algebra;
pub mod catalog;
pub mod coaction;
pub mod quantum_group;
pub mod state;

pub use algebra::{c, BlockAlgebra, Element, C64};
pub use coaction::{verify_coaction, CoAction};
pub use quantum_group::{verify_quantum_group, QuantumGroup, VerificationReport};
pub use state::{Functional, StateFunctional};
