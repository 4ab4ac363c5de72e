//! Batch front end: configuration, identification runs and reports.

pub mod config;
pub mod run;

use std::path::PathBuf;

use tagsr::evolution::EvolutionError;
use tagsr::SimulationError;
use thiserror::Error;

pub use config::{RunConfig, TEMPLATE};
pub use run::{load_model, run_evaluate, run_identification, score, score_sets, Metrics, ParetoReport, RunReport, SetMetrics};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Data { path: PathBuf, source: SimulationError },
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("model file {0}")]
    Model(String),
    #[error("evaluation failed: {0}")]
    Evaluate(String),
    #[error("the first front holds no evaluated model")]
    EmptyFront,
}
