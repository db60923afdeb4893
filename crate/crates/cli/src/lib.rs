//! Batch front-end of the `maxwell-dg` solver: scenario runs, convergence
//! sweeps, reference comparisons and their CSV/JSON outputs.

pub mod config;
pub mod driver;
pub mod output;

pub use config::{ConfigError, PostprocessSteps, RunConfig};
pub use driver::{
    compare_on_mesh, compare_with_reference, run, simulate, sweep, write_run, Comparison, ObserverOptions,
    RunOutcome, SweepEntry, SweepResult,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] maxwell_dg::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
