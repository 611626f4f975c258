//! Hybrid DGSEM / finite-volume solver core for the 2D compressible Euler
//! equations, plus the troubled-cell indicators that drive the hybrid
//! switching and a mesh refinement estimator.

pub mod basis;
pub mod cases;
pub mod dgsem;
pub mod error;
pub mod euler;
pub mod field;
pub mod indicators;
pub mod mat;
pub mod mesh;
pub mod sim;
pub mod snapshot;
pub mod timeint;
