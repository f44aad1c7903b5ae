//! Random-matrix laboratory for quantum spin-glass Hamiltonians.
//!
//! The crate builds Pauli-string Hamiltonians with random couplings (cyclic
//! chain, arbitrary graphs, p-spin glasses; Gaussian, spherical or custom
//! coefficient laws), diagonalizes them, and compares their empirical spectral
//! measures with reference laws in the Wasserstein-1 and bounded-Lipschitz
//! metrics.

pub mod dense;
pub mod ensembles;
pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod measures;
pub mod pauli;
pub mod rng;
pub mod spectra;
pub mod special;

pub use error::{Error, Result};
