//! Configuration parsing and command wiring for the `hyperorbit` binary.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod runner;

pub use config::{parse_config, ExperimentConfig};
pub use runner::{run, Command, RunError, RunOptions, RunOutcome};
