//! Experiment harness for the `less-infer` command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind, LoadedExperiment, WorldFile};
pub use error::{HarnessError, Result};
