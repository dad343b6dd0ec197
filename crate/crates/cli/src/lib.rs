//! Configuration, estimators and campaign drivers behind the `gfou` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod config;
pub mod error;
pub mod estimators;

pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
