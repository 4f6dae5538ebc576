//! Geometric-multigrid toolkit for the finite-difference Poisson equation:
//! additive Vanka and mass-stencil smoothers, a local Fourier analysis
//! engine, and a Dirichlet two-grid / V-cycle solver.

pub mod cli;
pub mod error;
pub mod lfa;
pub mod solver;
pub mod stencil;
pub mod vanka;

pub use error::{Error, Result};
