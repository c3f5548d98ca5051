use candle_core::{DType, Device};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swingnn_core::Graph;
use swingnn_model::{generate_graphs, GenerateOptions, GraphDecoding, ParamStore, Preconditioned, SwinGnn};

use crate::checkpoint::Checkpoint;
use crate::error::Result;

/// Which parameter set a checkpoint is sampled with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weights {
    Raw,
    Averaged,
}

pub fn denoiser(ckpt: &Checkpoint, weights: Weights) -> Result<Preconditioned<SwinGnn>> {
    let tensors = match weights {
        Weights::Raw => &ckpt.raw,
        Weights::Averaged => &ckpt.ema,
    };
    let mut store = ParamStore::from_tensors(tensors, DType::F32, Device::Cpu)?;
    let net = SwinGnn::new(&ckpt.config.model, &mut store)?;
    Ok(Preconditioned::new(net, ckpt.config.edm.clone()))
}

/// Samples `count` graphs with the averaged parameters. Variable-size
/// datasets are generated at the padded size and lose their isolated nodes.
pub fn generate(ckpt: &Checkpoint, count: usize, permute: bool, seed: u64) -> Result<Vec<Graph>> {
    let den = denoiser(ckpt, Weights::Averaged)?;
    let opts = GenerateOptions {
        count,
        n: ckpt.max_n,
        batch_size: ckpt.config.sample.batch_size,
        decoding: GraphDecoding::Plain,
        permute,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graphs = generate_graphs(&den, &opts, &ckpt.config.edm, &mut rng)?;
    Ok(if ckpt.variable_size {
        graphs.iter().map(Graph::without_isolated_nodes).collect()
    } else {
        graphs
    })
}
