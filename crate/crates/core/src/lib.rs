//! Phase-field hydrodynamic models for binary fluid mixtures.
//!
//! The crate covers four model classes (compressible with global or local mass
//! conservation, quasi-incompressible, incompressible), their bulk free energies,
//! the linear stability analysis of constant states and a 1D periodic transient
//! solver used to cross-check the dispersion relations.

pub mod dispersion;
pub mod error;
pub mod free_energy;
pub mod grid;
pub mod models;
pub mod simulator;

pub use error::{Error, Result};
pub use num_complex::Complex64;
