//! Boltzmann–Kac particle simulation and quantitative chaos measurement.
//!
//! The crate is organized bottom-up:
//!
//! - [`kernels`]: one binary collision (geometry, cross sections, deflection sampling).
//! - [`kac_process`]: the N-particle jump process and replica ensembles.
//! - [`chaotic_init`]: product, uniform-sphere and conditioned-product initial laws.
//! - [`limit_eq`]: mean-field references (Maxwellian, BKW profile, moment equations).
//! - [`chaos_metrics`]: truncated Wasserstein distances, chaos functionals,
//!   entropy and Fisher estimators, rate fits.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos_metrics;
pub mod chaotic_init;
pub mod error;
pub mod kac_process;
pub mod kernels;
pub mod limit_eq;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
