//! Spectral toolkit for the 3D gravity-capillary water-wave equations on T².
//!
//! The crate is organized around truncated Fourier fields ([`spectral`]),
//! Bony-Weyl paradifferential calculus ([`paracalc`]), the dispersion
//! relation and three-wave resonance scans ([`dispersion`]), a flattened-strip
//! Dirichlet-Neumann solver with paralinearization probes ([`dno`]),
//! quasi-resonant normal-form machinery with block partitions and modified
//! energies ([`nf`]), and a pseudospectral time integrator with conservation
//! and lifespan experiments ([`sim`]).

pub mod dispersion;
pub mod dno;
pub mod nf;
pub mod paracalc;
pub mod sim;
pub mod spectral;

pub use num_complex::Complex64;
