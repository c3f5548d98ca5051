//! Exact optimal denoiser for a uniform mixture of Dirac atoms under Gaussian
//! noise. Useful as a reference denoiser for the sampler.

use candle_core::{DType, Device, Tensor};
use swingnn_core::gmm::{gmm_optimal_denoiser, GmmSpec};

use crate::edm::{Denoiser, DiffusionState};
use crate::error::{Error, Result};

/// Posterior mean `E[A | Ã]` over a fixed set of clean states. Each center is
/// one item's edge tensor followed by its node tensor, flattened row-major.
/// The self-conditioning input is ignored.
#[derive(Clone, Debug)]
pub struct GmmDenoiser {
    spec: GmmSpec,
    n: usize,
    edge_channels: usize,
    node_channels: usize,
}

impl GmmDenoiser {
    pub fn new(centers: Vec<Vec<f64>>, n: usize, edge_channels: usize, node_channels: usize) -> Result<Self> {
        let dim = n * n * edge_channels + n * node_channels;
        let spec = GmmSpec::new(centers, 1.0)?;
        if spec.dim() != dim {
            return Err(Error::Shape(format!("centers have {} entries, expected {dim}", spec.dim())));
        }
        Ok(Self {
            spec,
            n,
            edge_channels,
            node_channels,
        })
    }

    /// Centers taken from every item of a batched state.
    pub fn from_state(clean: &DiffusionState) -> Result<Self> {
        let dims = clean.edges.dims();
        let (n, ce) = (dims[1], dims[3]);
        let cv = clean.nodes.as_ref().map_or(0, |t| t.dims()[2]);
        let centers = (0..clean.batch())
            .map(|b| {
                let mut c = clean.item_edges(b)?;
                c.extend(clean.item_nodes(b)?.unwrap_or_default());
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(centers, n, ce, cv)
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        self.spec.centers()
    }
}

impl Denoiser for GmmDenoiser {
    fn denoise(&self, noisy: &DiffusionState, _self_cond: &DiffusionState, sigma: &[f64]) -> Result<DiffusionState> {
        let b = noisy.batch();
        if sigma.len() != b {
            return Err(Error::Shape(format!("{} noise levels for batch {b}", sigma.len())));
        }
        let edge_len = self.n * self.n * self.edge_channels;
        let mut edges = Vec::with_capacity(b * edge_len);
        let mut nodes = Vec::with_capacity(b * self.n * self.node_channels);
        for (i, &s) in sigma.iter().enumerate() {
            let mut x = noisy.item_edges(i)?;
            x.extend(noisy.item_nodes(i)?.unwrap_or_default());
            let d = gmm_optimal_denoiser(&x, &self.spec.with_sigma(s)?)?;
            edges.extend_from_slice(&d[..edge_len]);
            nodes.extend_from_slice(&d[edge_len..]);
        }
        let device = noisy.device();
        let dtype = noisy.dtype();
        let edges = Tensor::from_vec(edges, (b, self.n, self.n, self.edge_channels), device)?.to_dtype(dtype)?;
        let nodes = if self.node_channels > 0 {
            Some(Tensor::from_vec(nodes, (b, self.n, self.node_channels), device)?.to_dtype(dtype)?)
        } else {
            None
        };
        Ok(DiffusionState::new(edges, nodes))
    }

    fn dtype(&self) -> DType {
        DType::F64
    }

    fn device(&self) -> Device {
        Device::Cpu
    }
}
