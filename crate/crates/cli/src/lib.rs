//! Experiment runner for lattice-hydro: epsilon sweeps, CSV tables, convergence summaries and SVG plots.

pub mod config;
pub mod plot;
pub mod runner;
pub mod table;

pub use config::ExperimentConfig;
pub use plot::render_plots;
pub use runner::{check_model, run_experiment, RunOptions, RunOutput};
pub use table::{convergence_table, ResultTable, Row, ValueKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{0}")]
    Io(String),

    #[error("malformed result table: {0}")]
    Table(String),

    #[error("need err rows for at least two eps values, found {found}")]
    InsufficientRows { found: usize },

    #[error(transparent)]
    Numeric(#[from] lattice_hydro::Error),

    #[error("condition check failed: {0}")]
    ConditionsFailed(String),

    #[error("error {err:e} at eps = {eps} exceeds the tolerance {tol:e}")]
    ToleranceExceeded { err: f64, eps: f64, tol: f64 },

    #[error("plotting failed: {0}")]
    Plot(String),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } | CliError::Table(_) | CliError::InsufficientRows { .. } => 2,
            CliError::Numeric(_) | CliError::ConditionsFailed(_) | CliError::ToleranceExceeded { .. } => 3,
            CliError::Io(_) | CliError::Plot(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
