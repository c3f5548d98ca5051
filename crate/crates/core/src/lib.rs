//! Graph primitives, exact permutation-symmetry tools, synthetic datasets and
//! evaluation metrics for permutation-aware graph diffusion.

pub mod datasets;
pub mod edgelist;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod graph;
pub mod invariance;
pub mod iso;
pub mod mixture;
pub mod quantize;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{permute, uniform_random_permutation, Graph, Permutation};
pub use mixture::{total_variation, DiracMixture, TvConvention};
