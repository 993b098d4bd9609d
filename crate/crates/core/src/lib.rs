//! Localization diagnostics for disordered harmonic oscillator lattices.
//!
//! Every many-body quantity (commutator norms, ground-state and thermal
//! correlations) is reduced to functional calculus of the one-particle
//! matrix `h = mu^{1/2} h0 mu^{1/2}`, which is diagonalized densely.

pub mod error;
pub mod model;
pub mod spectral;
pub mod dynamics;
pub mod states;
pub mod stats;
pub mod green;
pub mod experiment;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
