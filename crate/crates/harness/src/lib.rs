//! Experiment runner for the variable-selection engine: JSON configs in,
//! CSV tables and JSON artifacts out, with deterministic seeding.

pub mod config;
pub mod output;
pub mod run;
pub mod seed;

use std::path::{Path, PathBuf};

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use output::CheckOutcome;
pub use run::{run_experiment, RunOptions, RunReport};
pub use seed::{derive_seed, seed_stream, seed_stream_at, Role};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] bvs_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}: {1}")]
    Csv(PathBuf, csv::Error),

    #[error("json: {0}")]
    Json(serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}
