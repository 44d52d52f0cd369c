//! Experiment runner for the Follow-or-Explore learner: configuration,
//! built-in scenarios, execution across seeds and output files.

pub mod config;
pub mod output;
pub mod runner;
pub mod scenarios;

use foe_core::FoeError;
use thiserror::Error;

pub use config::{EnvironmentSpec, ExperimentConfig, Mode, PoolSpec, PriorKind};
pub use runner::{run_experiment, run_seed, ExperimentReport, RunOptions, RunOutput, SeedReport};
pub use scenarios::{scenario, scenario_names};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(#[from] FoeError),
    #[error("I/O error: {0}")]
    Io(String),
}

impl LabError {
    /// Process exit status: 2 for bad configuration, 3 for a failure while
    /// running, 1 for I/O trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Run(_) => 3,
            LabError::Io(_) => 1,
        }
    }
}
