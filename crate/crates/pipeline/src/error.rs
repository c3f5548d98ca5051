use std::path::PathBuf;

use thiserror::Error;

use crate::checkpoint::Checkpoint;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] swingnn_model::Error),
    #[error(transparent)]
    Graph(#[from] swingnn_core::Error),
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}, step {step}: {message}")]
    Diverged {
        epoch: usize,
        step: usize,
        message: String,
        /// State at the end of the last completed epoch.
        last_good: Box<Checkpoint>,
    },
    #[error("{failed} of {total} checks failed")]
    Verification { failed: usize, total: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Graph(swingnn_core::Error::Io(_)) => "io",
            Self::Graph(swingnn_core::Error::Parse { .. }) => "input",
            Self::Graph(_) => "input",
            Self::Checkpoint(_) => "checkpoint",
            Self::Diverged { .. } => "diverged",
            Self::Model(swingnn_model::Error::TrainingDiverged(_)) => "diverged",
            Self::Model(swingnn_model::Error::SamplingDiverged { .. }) => "diverged",
            Self::Model(swingnn_model::Error::Config(_)) => "config",
            Self::Model(_) | Self::Tensor(_) | Self::Shape(_) => "numeric",
            Self::Verification { .. } => "verification",
        }
    }

    /// Process exit code for [`Error::category`]. Usage errors exit with 2.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 3,
            "io" => 4,
            "input" => 5,
            "checkpoint" => 6,
            "diverged" => 7,
            "numeric" => 8,
            "verification" => 9,
            _ => 1,
        }
    }
}
