//! Casimir interaction between perfect electromagnetic conductor (PEMC) spheres and planes.

pub mod analysis;
pub mod dipole;
pub mod engine;
pub mod error;
pub mod hightemp;
pub mod mie;
pub mod pfa;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
