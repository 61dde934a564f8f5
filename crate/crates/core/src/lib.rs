//! Numerical toolkit for instability criteria of trapped, pair-interacting
//! N-body Schrödinger models carrying a wavefunction-energy coupling `w`.
//!
//! - [`potentials`]: pair potentials, total interaction energy, stability-constant estimates.
//! - [`criteria`]: sufficient conditions (i)-(iv) and the admissible window for `w`.
//! - [`states`]: Gaussian lattice states and their superpositions.
//! - [`bound`]: variational lower bound on the top eigenvalue of `xbar^t Lambda^-1 xbar`.
//! - [`scaling`]: body-count scaling runs and power-law fits.
//! - [`spectral`]: rank-structured determinant machinery and lattice discretisations.
//! - [`cli`]: the `wfe` batch driver.

#![allow(clippy::needless_range_loop)]

pub mod bound;
pub mod cli;
pub mod criteria;
pub mod error;
pub mod potentials;
pub mod quadrature;
pub mod rng;
pub mod scaling;
pub mod spectral;
pub mod states;

pub use error::{Error, Result};
