//! Pseudo-spectral lab for surface quasi-geostrophic, 2D Euler and CLM 1D
//! active scalar models, with saddle tracking, kernel quadrature oracles and
//! growth-law fits.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod fits;
pub mod integrator;
pub mod kernel;
pub mod models;
pub mod saddle;
pub mod series;
pub mod spectral;
