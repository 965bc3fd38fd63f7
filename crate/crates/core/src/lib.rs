//! Real-time path integrals on a spatial lattice.
//!
//! The short-time kernel `K(x_j, x_i; dt)` of a polynomial potential is
//! sampled on a uniform grid, squared up to a finite-time propagator `G(T)`,
//! and then used to evolve wavefunctions, to read energy levels off the
//! Fourier transform of `Tr G(t)`, and to time tunnelling in a double well.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod propagator;
pub mod spectral;
pub mod tunneling;

pub use error::{Error, Result};
pub use lattice::{SpatialGrid, TimeSlicing};
pub use model::{DoubleWellParams, PotentialModel};
pub use propagator::{KernelMatrix, PropagatorMatrix};
