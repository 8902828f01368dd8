//! Numerical laboratory for the Gross-Pitaevskii limit of dilute Bose gases.

pub mod error;
pub mod gp;
pub mod grid;
pub mod ineqlab;
pub mod linalg;
pub mod manybody;
pub mod onebody;
pub mod potentials;
pub mod quad;
pub mod scattering;

pub use error::{Error, Result};
