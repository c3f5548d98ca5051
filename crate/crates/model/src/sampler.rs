//! Stochastic second-order sampler with self-conditioning, and graph decoding.

use rand::Rng;
use swingnn_core::encoding::{decode_attributes, EncodedGraph, EncodingScheme};
use swingnn_core::quantize::quantize_signed;
use swingnn_core::{permute, Graph, Permutation};

use crate::edm::{gamma, normal_state, time_grid, Denoiser, DiffusionState, EdmConfig, StateShape};
use crate::error::{Error, Result};

/// Runs the sampler from `Ã ~ N(0, t_0²I)` down the time grid and returns the
/// final state `Ã^(N)` without a further denoising pass.
pub fn sample<D: Denoiser + ?Sized, R: Rng + ?Sized>(
    denoiser: &D,
    shape: StateShape,
    rng: &mut R,
    cfg: &EdmConfig,
) -> Result<DiffusionState> {
    cfg.validate()?;
    let t = time_grid(cfg);
    let dtype = denoiser.dtype();
    let device = denoiser.device();
    let b = shape.batch;
    let mut x = normal_state(shape, rng, dtype, &device)?.scale(t[0])?;
    let mut sc = x.zeros_like()?;
    for i in 0..cfg.steps {
        let (ti, tn) = (t[i], t[i + 1]);
        let eps = normal_state(shape, rng, dtype, &device)?.scale(cfg.s_noise)?;
        let t_hat = (1.0 + gamma(ti, cfg)) * ti;
        let x_hat = x.add(&eps.scale((t_hat * t_hat - ti * ti).max(0.0).sqrt())?)?;
        // detached so parameter-backed networks do not chain autograd history across steps
        sc = denoiser.denoise(&x_hat, &sc, &vec![t_hat; b])?.detach();
        let d = x_hat.sub(&sc)?.scale(1.0 / t_hat)?;
        let mut next = x_hat.add(&d.scale(tn - t_hat)?)?;
        if tn > 0.0 {
            let sc_next = denoiser.denoise(&next, &sc, &vec![tn; b])?.detach();
            let d_next = next.sub(&sc_next)?.scale(1.0 / tn)?;
            let slope = d.add(&d_next)?.scale(0.5)?;
            next = x_hat.add(&slope.scale(tn - t_hat)?)?;
        }
        if !next.is_finite()? {
            return Err(Error::SamplingDiverged { step: i });
        }
        x = next;
    }
    Ok(x)
}

/// How sampled states become graphs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphDecoding {
    /// One ±1 adjacency channel, thresholded after symmetrization.
    Plain,
    /// Categorical edge and node channels.
    Encoded(EncodingScheme),
}

/// Decodes every item of a sampled state.
pub fn decode_state(state: &DiffusionState, decoding: GraphDecoding) -> Result<Vec<Graph>> {
    let n = state.edges.dims()[1];
    (0..state.batch())
        .map(|b| {
            let edges = state.item_edges(b)?;
            let g = match decoding {
                GraphDecoding::Plain => quantize_signed(n, &edges)?,
                GraphDecoding::Encoded(scheme) => {
                    let nodes = state.item_nodes(b)?.unwrap_or_default();
                    let enc = EncodedGraph {
                        n,
                        edge_channels: scheme.edge_channels(),
                        node_channels: scheme.node_channels(),
                        edges,
                        nodes,
                    };
                    decode_attributes(&enc, &scheme)?
                }
            };
            Ok(g)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerateOptions {
    pub count: usize,
    pub n: usize,
    pub batch_size: usize,
    pub decoding: GraphDecoding,
    /// Relabel each output with a fresh uniformly random permutation.
    pub permute: bool,
}

/// Samples `count` graphs in batches, decodes them and optionally permutes each one.
pub fn generate_graphs<D: Denoiser + ?Sized, R: Rng + ?Sized>(
    denoiser: &D,
    opts: &GenerateOptions,
    cfg: &EdmConfig,
    rng: &mut R,
) -> Result<Vec<Graph>> {
    let (edge_channels, node_channels) = match opts.decoding {
        GraphDecoding::Plain => (1, 0),
        GraphDecoding::Encoded(s) => (s.edge_channels(), s.node_channels()),
    };
    let mut out = Vec::with_capacity(opts.count);
    while out.len() < opts.count {
        let batch = opts.batch_size.max(1).min(opts.count - out.len());
        let shape = StateShape {
            batch,
            n: opts.n,
            edge_channels,
            node_channels,
        };
        let state = sample(denoiser, shape, rng, cfg)?;
        for g in decode_state(&state, opts.decoding)? {
            out.push(if opts.permute {
                permute(&g, &Permutation::uniform(g.n(), rng))?
            } else {
                g
            });
        }
    }
    Ok(out)
}
