//! Configuration-driven experiments on top of `kaclab`: run directories
//! with manifests, resumable replicas, tabulated reports and SVG plots.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod plot;

pub use config::{parse_config, validate_config, ExperimentConfig, ExperimentKind};
pub use error::{LabError, LabResult};
