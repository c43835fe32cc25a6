//! Semi-infinite non-reciprocal SSH model on a Fock-state lattice.
//!
//! The lattice sites are |g,n⟩ and |e,n⟩ for phonon number n. Intracell
//! hoppings are non-reciprocal and intercell hoppings grow as √(n+1). The
//! crate provides the Hamiltonians, the exact eigensystem obtained from a
//! similarity map to the Jaynes–Cummings model, conditional time evolution,
//! a uniform-coupling reference chain, localization observables and
//! trapped-ion feasibility checks.

pub mod cli;
pub mod dynamics;
pub mod eigen;
pub mod error;
mod integrator;
pub mod ion;
pub mod model;
pub mod observables;
pub mod uniform;

pub use error::{Error, Result};
pub use model::{BasisSpec, ComplexMatrix, Level, ModelParams, StateVector};
