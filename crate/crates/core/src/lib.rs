//! Free-fermion quench dynamics and entanglement-link analysis.
//!
//! Gaussian states are represented by their one-body correlation matrix
//! `C_ij = <c†_i c_j>`. From it we measure block entropies, extract the
//! entanglement-link (EL) matrix `J_ij` by double finite differences of the
//! contiguous-block entropies, and compare the measured dynamics with the
//! extended quasiparticle picture: piecewise-linear entropy curves, a
//! delta-line front engine, and a leapfrog solver for the EL wave equation.
//!
//! Site indices are 0-based throughout the library. A contiguous block is
//! written as the half-open range `[a, b)`.

pub mod analysis;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod lattice;
pub mod qpp;
pub mod wavesolver;

pub use error::{Error, Result};
pub use lattice::Boundary;
