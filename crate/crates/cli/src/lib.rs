//! Configuration-driven harness around the detection pipeline: a JSON
//! experiment config, a replicated Monte Carlo runner, and the `finrank`
//! command-line interface.

pub mod cli;
pub mod config;
pub mod experiment;

pub use config::{ConfigError, ExperimentConfig, ScheduleSection, SmootherSection};
pub use experiment::{
    run_experiment, write_experiment_outputs, ExperimentError, ExperimentSummary, ReplicateFailure,
    UpdateRow,
};
