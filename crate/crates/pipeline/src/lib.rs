//! Training, sampling and evaluation around the graph diffusion model.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod ema;
pub mod error;
pub mod experiments;
pub mod sample;
pub mod train;

pub use checkpoint::Checkpoint;
pub use config::{Config, DatasetSpec, SampleConfig, TrainConfig};
pub use error::{Error, Result};
