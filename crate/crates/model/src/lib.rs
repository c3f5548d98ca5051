//! Diffusion model for adjacency matrices: a shifted-window transformer over
//! edge tokens, EDM preconditioning and training loss, and a second-order
//! stochastic sampler with self-conditioning.

pub mod backbone;
pub mod edm;
pub mod error;
pub mod layers;
pub mod oracle;
pub mod params;
pub mod sampler;
pub mod swin;

pub use backbone::{ModelConfig, SwinGnn};
pub use edm::{Denoiser, DiffusionState, EdmConfig, Preconditioned, RawNetwork, StateShape};
pub use error::{Error, Result};
pub use oracle::GmmDenoiser;
pub use params::ParamStore;
pub use sampler::{generate_graphs, sample, GenerateOptions, GraphDecoding};
