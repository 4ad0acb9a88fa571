//! Nonlinear Schrödinger equation on the half-line with an inhomogeneous
//! Robin boundary condition: spectral transforms, boundary kernels, a
//! Duhamel solver, a finite-difference cross-check and asymptotic analysis.

pub mod error;
pub mod field;
pub mod quad;
pub mod spectral;
pub mod forcing;
pub mod boundary;
pub mod trajectory;
pub mod solver;
pub mod fd;
pub mod analysis;
pub mod experiment;

pub use error::{Error, Result};
pub use field::{ComplexField, Grid, Repr};
