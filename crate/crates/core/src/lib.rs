//! Block preconditioners for double saddle-point systems
//! `[A B^T 0; B -D C^T; 0 C 0]`, with dense and sparse kernels, Krylov
//! solvers, closed-form spectral oracles and a MAC Stokes-Darcy generator.

pub mod bench;
pub mod dense;
pub mod error;
pub mod krylov;
pub mod saddle;
pub mod sparse;
pub mod spectral;
pub mod stokes_darcy;

pub use error::{Error, Result};
