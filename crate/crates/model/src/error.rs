use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error(transparent)]
    Graph(#[from] swingnn_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sampling diverged at step {step}")]
    SamplingDiverged { step: usize },
    #[error("training diverged: {0}")]
    TrainingDiverged(String),
    #[error("missing parameter {0}")]
    MissingParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
