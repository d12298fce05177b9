//! Scenario files, run orchestration and output for the `aniflow` command.

pub mod config;
pub mod output;
pub mod pipeline;

pub use config::Scenario;
pub use pipeline::{RunManifest, SweepConfig};
