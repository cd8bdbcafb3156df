//! Experiment orchestration for the retroplan engine: configuration, seed
//! parallel execution, metrics and artifacts.

pub mod config;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod output;
pub mod svg;

pub use config::{ExperimentConfig, ExperimentKind, Scale};
pub use error::{HarnessError, Result};
pub use experiments::{run_experiment, ExperimentResult, MetricKind, SettingRuns, SettingSummary};
pub use output::{analyze, write_experiment};
