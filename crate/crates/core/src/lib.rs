//! Pariser-Parr-Pople models of nanographenes, Trotter error constants for
//! second-order product formulas, and phase-estimation cost estimates.

pub mod error;
pub mod freefermion;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod norms;
pub mod pauli;
pub mod sector;
pub mod resources;
pub mod spectral;

pub use error::{Error, Result};

/// Published reference values with citation strings, used by the acceptance
/// run and `trotterlab reproduce`.
pub const REFERENCE_VALUES_JSON: &str = include_str!("../data/reference_values.json");
