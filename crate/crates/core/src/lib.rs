//! Immersed interface solver for 2D periodic incompressible Navier-Stokes flow
//! with an exactly known moving interface, together with a Fourier-multiplier
//! operator toolkit and convergence study drivers.

pub mod corrections;
pub mod error;
pub mod grid;
pub mod harness;
pub mod interface;
pub mod jet;
pub mod random;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec, VectorGridFunction};
