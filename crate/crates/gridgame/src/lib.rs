//! Configuration-driven experiments for the prosumer energy-trading game.
//!
//! Each experiment reads an [`config::ExperimentConfig`], computes its
//! results with `gridgame-core` and writes CSV files into an output
//! directory. Identical configurations and seeds produce byte-identical
//! files.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, Experiment, ExperimentConfig};
