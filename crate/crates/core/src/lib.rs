//! Simulation and analysis of far-field intensity correlations of
//! pseudo-thermal light in the photon-counting regime.
//!
//! The crate is layered bottom-up:
//!
//! - [`oracle`]: exact thermal-state moments on a truncated Fock space.
//! - [`analytic`]: closed-form coherence factor, g2 curves and visibility.
//! - [`montecarlo`]: random speckle screens, far-field propagation and
//!   ensemble g2 estimation.
//! - [`counting`]: photon event sampling, coincidence windows and
//!   time-difference histograms.
//! - [`experiments`]: the measurement harness behind the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod counting;
pub mod error;
pub mod experiments;
pub mod montecarlo;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
