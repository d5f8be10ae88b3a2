//! Finite element solver for a Cahn-Hilliard-Navier-Stokes system in a
//! periodic channel with dynamic wall boundary conditions.
//!
//! The discretization uses continuous P1 elements for the phase field, the
//! chemical potential and the pressure, Taylor-Hood P2 elements for the
//! velocity, and a convex-concave splitting of the bulk and wall potentials.
//! Each time step is a fully coupled nonlinear system solved by Newton's
//! method with a sparse direct LU factorization.
//!
//! Module map:
//!
//! * [`mesh`]: structured channel triangulations with periodic pairing.
//! * [`spaces`]: quadrature, reference bases and degree-of-freedom maps.
//! * [`materials`]: Flory-Huggins potential, wall potential, mobility and the
//!   blended Carreau-Yasuda viscosity.
//! * [`assembly`]: residual, Jacobian, energy and structural diagnostics.
//! * [`solver`]: compressed-row sparse matrices, LU, and the Newton driver.
//! * [`timeloop`]: initial data and time marching.
//! * [`analysis`]: self-convergence errors and orders of convergence.
//! * [`io`]: configuration files and output writers.
//! * [`fixtures`]: golden diagnostics used for regression checks.
//! * [`validation`]: property suites over materials and discretization.

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod materials;
pub mod mesh;
pub mod solver;
pub mod spaces;
pub mod timeloop;
pub mod validation;

pub use error::{Error, Result};
