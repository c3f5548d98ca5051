//! U-shaped shifted-window transformer over the edge-token grid.
//!
//! Layout is channels-last throughout. The adjacency (plus self-conditioning
//! and, for attributed graphs, source and target node features) is padded to a
//! multiple of `patch · window · 2^(stages−1)`, cut into `patch×patch`
//! patches, processed by encoder stages with parity-split downsampling, a
//! bottleneck, and decoder stages that upsample and merge the encoder skips.
//! The result is unpatched, cropped back to `n×n` and read out per edge; node
//! outputs read the mean of each row's edge features.

use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use crate::edm::{DiffusionState, RawNetwork};
use crate::error::{Error, Result};
use crate::layers::{LayerNorm, Linear, Mlp};
use crate::params::ParamStore;
use crate::swin::{StageMasks, SwinBlock};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub patch_size: usize,
    pub window_size: usize,
    pub token_dim: usize,
    pub heads: Vec<usize>,
    pub down_layers: Vec<usize>,
    pub up_layers: Vec<usize>,
    #[serde(default = "one")]
    pub bottleneck_layers: usize,
    #[serde(default = "one")]
    pub edge_channels: usize,
    #[serde(default)]
    pub node_channels: usize,
    /// Width of the shared noise-level embedding; defaults to `4·token_dim`.
    #[serde(default)]
    pub cond_dim: Option<usize>,
}

fn one() -> usize {
    1
}

impl ModelConfig {
    /// Width 60, four stages, patch 4, window 6.
    pub fn standard() -> Self {
        Self {
            patch_size: 4,
            window_size: 6,
            token_dim: 60,
            heads: vec![3, 6, 12, 24],
            down_layers: vec![1, 1, 3, 1],
            up_layers: vec![1, 1, 3, 1],
            bottleneck_layers: 1,
            edge_channels: 1,
            node_channels: 0,
            cond_dim: None,
        }
    }

    pub fn stages(&self) -> usize {
        self.heads.len()
    }

    pub fn stage_dim(&self, i: usize) -> usize {
        self.token_dim << i
    }

    pub fn cond_width(&self) -> usize {
        self.cond_dim.unwrap_or(4 * self.token_dim)
    }

    pub fn input_channels(&self) -> usize {
        2 * self.edge_channels + 4 * self.node_channels
    }

    /// Side length the input is zero-padded to.
    pub fn padded_size(&self, n: usize) -> usize {
        let unit = self.patch_size * self.window_size * (1 << (self.stages() - 1));
        n.max(1).div_ceil(unit) * unit
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.stages() == 0 {
            return bad("at least one stage is required".into());
        }
        if self.down_layers.len() != self.stages() || self.up_layers.len() != self.stages() {
            return bad(format!(
                "heads ({}), down_layers ({}) and up_layers ({}) must have equal length",
                self.stages(),
                self.down_layers.len(),
                self.up_layers.len()
            ));
        }
        if self.patch_size == 0 || self.window_size == 0 || self.token_dim == 0 || self.edge_channels == 0 {
            return bad("patch_size, window_size, token_dim and edge_channels must be positive".into());
        }
        for (i, &h) in self.heads.iter().enumerate() {
            if h == 0 || self.stage_dim(i) % h != 0 {
                return bad(format!("{h} heads do not divide stage {i} width {}", self.stage_dim(i)));
            }
        }
        Ok(())
    }
}

/// Sinusoidal features of a scalar at log-spaced frequencies in `[1, 100]`.
pub fn fourier_features(x: &Tensor, width: usize) -> Result<Tensor> {
    let half = (width / 2).max(1);
    let freqs: Vec<f64> = (0..half)
        .map(|k| {
            let frac = if half == 1 { 0.0 } else { k as f64 / (half - 1) as f64 };
            (frac * 100f64.ln()).exp()
        })
        .collect();
    let f = Tensor::from_vec(freqs, (1, half), x.device())?.to_dtype(x.dtype())?;
    let arg = x.reshape(((), 1))?.broadcast_mul(&f)?;
    Ok(Tensor::cat(&[arg.cos()?, arg.sin()?], 1)?)
}

#[derive(Clone, Debug)]
struct Stage {
    blocks: Vec<SwinBlock>,
}

impl Stage {
    #[allow(clippy::too_many_arguments)]
    fn new(
        store: &mut ParamStore,
        name: &str,
        count: usize,
        dim: usize,
        heads: usize,
        window: usize,
        cond: usize,
    ) -> Result<Self> {
        let blocks = (0..count)
            .map(|k| SwinBlock::new(store, &format!("{name}.{k}"), dim, heads, window, cond, k % 2 == 1))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    fn forward(&self, x: &Tensor, cond: &Tensor, masks: &StageMasks) -> Result<Tensor> {
        let mut x = x.clone();
        for b in &self.blocks {
            x = b.forward(&x, cond, masks)?;
        }
        Ok(x)
    }
}

/// Parity split into four half-size grids, stacked on channels, then LN and a
/// linear map to the next width.
#[derive(Clone, Debug)]
pub struct Downsample {
    norm: LayerNorm,
    reduce: Linear,
}

impl Downsample {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, out: usize) -> Result<Self> {
        Ok(Self {
            norm: LayerNorm::new(store, &format!("{name}.norm"), 4 * dim)?,
            reduce: Linear::new(store, &format!("{name}.reduce"), 4 * dim, out, false)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.reduce.forward(&self.norm.forward(&parity_split(x)?)?)
    }
}

/// `(B, H, W, C)` → `(B, H/2, W/2, 4C)` with channel groups
/// `[x[0::2, 0::2], x[1::2, 0::2], x[0::2, 1::2], x[1::2, 1::2]]`.
pub fn parity_split(x: &Tensor) -> Result<Tensor> {
    let (b, h, w, c) = x.dims4()?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("cannot halve a {h}x{w} grid")));
    }
    Ok(x.reshape((b, h / 2, 2, w / 2, 2, c))?
        .permute((0, 1, 3, 4, 2, 5))?
        .contiguous()?
        .reshape((b, h / 2, w / 2, 4 * c))?)
}

/// Inverse of [`parity_split`].
pub fn parity_merge(x: &Tensor) -> Result<Tensor> {
    let (b, h, w, c4) = x.dims4()?;
    let c = c4 / 4;
    Ok(x.reshape((b, h, w, 2, 2, c))?
        .permute((0, 1, 4, 2, 3, 5))?
        .contiguous()?
        .reshape((b, 2 * h, 2 * w, c))?)
}

/// Linear expansion into four parity groups, interleaved to double resolution.
#[derive(Clone, Debug)]
pub struct Upsample {
    expand: Linear,
}

impl Upsample {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, out: usize) -> Result<Self> {
        Ok(Self {
            expand: Linear::new(store, &format!("{name}.expand"), dim, 4 * out, false)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        parity_merge(&self.expand.forward(x)?)
    }
}

/// `(B, L, L, C)` → `(B, L/p, L/p, p²C)`.
pub fn patchify(x: &Tensor, p: usize) -> Result<Tensor> {
    let (b, h, w, c) = x.dims4()?;
    if h == 0 || w == 0 || h % p != 0 || w % p != 0 {
        return Err(Error::Shape(format!("{h}x{w} input is not tiled by {p}x{p} patches")));
    }
    Ok(x.reshape((b, h / p, p, w / p, p, c))?
        .permute((0, 1, 3, 2, 4, 5))?
        .contiguous()?
        .reshape((b, h / p, w / p, p * p * c))?)
}

/// Inverse of [`patchify`].
pub fn unpatchify(x: &Tensor, p: usize) -> Result<Tensor> {
    let (b, g, _, pc) = x.dims4()?;
    let c = pc / (p * p);
    Ok(x.reshape((b, g, g, p, p, c))?
        .permute((0, 1, 3, 2, 4, 5))?
        .contiguous()?
        .reshape((b, g * p, g * p, c))?)
}

#[derive(Clone, Debug)]
pub struct SwinGnn {
    cfg: ModelConfig,
    dtype: DType,
    device: Device,
    cond_mlp: Mlp,
    embed: Linear,
    encoder: Vec<Stage>,
    downs: Vec<Downsample>,
    bottleneck: Stage,
    ups: Vec<Option<Upsample>>,
    merges: Vec<Linear>,
    decoder: Vec<Stage>,
    norm: LayerNorm,
    unembed: Linear,
    edge_head: Mlp,
    node_head: Option<Mlp>,
}

impl SwinGnn {
    pub fn new(cfg: &ModelConfig, store: &mut ParamStore) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.token_dim;
        let e = cfg.cond_width();
        let s = cfg.stages();
        let m = cfg.window_size;
        let p = cfg.patch_size;
        let fourier = 2 * (d / 2).max(1);
        let mut encoder = Vec::new();
        let mut downs = Vec::new();
        let mut ups = Vec::new();
        let mut merges = Vec::new();
        let mut decoder = Vec::new();
        for i in 0..s {
            let di = cfg.stage_dim(i);
            encoder.push(Stage::new(store, &format!("enc.{i}"), cfg.down_layers[i], di, cfg.heads[i], m, e)?);
            if i + 1 < s {
                downs.push(Downsample::new(store, &format!("down.{i}"), di, cfg.stage_dim(i + 1))?);
            }
        }
        let last = s - 1;
        let bottleneck = Stage::new(store, "mid", cfg.bottleneck_layers, cfg.stage_dim(last), cfg.heads[last], m, e)?;
        for i in 0..s {
            let di = cfg.stage_dim(i);
            ups.push(if i + 1 < s {
                Some(Upsample::new(store, &format!("up.{i}"), cfg.stage_dim(i + 1), di)?)
            } else {
                None
            });
            merges.push(Linear::new(store, &format!("merge.{i}"), 2 * di, di, true)?);
            decoder.push(Stage::new(store, &format!("dec.{i}"), cfg.up_layers[i], di, cfg.heads[i], m, e)?);
        }
        let node_head = if cfg.node_channels > 0 {
            Some(Mlp::new(store, "node_head", d, d, cfg.node_channels)?)
        } else {
            None
        };
        Ok(Self {
            cond_mlp: Mlp::new(store, "cond", fourier, e, e)?,
            embed: Linear::new(store, "embed", p * p * cfg.input_channels(), d, true)?,
            encoder,
            downs,
            bottleneck,
            ups,
            merges,
            decoder,
            norm: LayerNorm::new(store, "norm", d)?,
            unembed: Linear::new(store, "unembed", d, p * p * d, true)?,
            edge_head: Mlp::new(store, "edge_head", d, d, cfg.edge_channels)?,
            node_head,
            cfg: cfg.clone(),
            dtype: store.dtype(),
            device: store.device().clone(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    fn input_features(&self, x: &DiffusionState, sc: &DiffusionState) -> Result<Tensor> {
        let (b, n, n2, ce) = x.edges.dims4()?;
        if n != n2 || ce != self.cfg.edge_channels || sc.edges.dims() != x.edges.dims() {
            return Err(Error::Shape(format!(
                "edge input {:?} / self-conditioning {:?} for {} edge channels",
                x.edges.dims(),
                sc.edges.dims(),
                self.cfg.edge_channels
            )));
        }
        let mut parts = vec![x.edges.clone(), sc.edges.clone()];
        if self.cfg.node_channels > 0 {
            let cv = self.cfg.node_channels;
            let (Some(xn), Some(sn)) = (&x.nodes, &sc.nodes) else {
                return Err(Error::Shape("node features are required".into()));
            };
            if xn.dims() != [b, n, cv] || sn.dims() != [b, n, cv] {
                return Err(Error::Shape(format!("node input {:?}, expected {:?}", xn.dims(), [b, n, cv])));
            }
            let nodes = Tensor::cat(&[xn, sn], 2)?;
            parts.push(nodes.unsqueeze(2)?.broadcast_as((b, n, n, 2 * cv))?.contiguous()?);
            parts.push(nodes.unsqueeze(1)?.broadcast_as((b, n, n, 2 * cv))?.contiguous()?);
        }
        Ok(Tensor::cat(&parts, 3)?)
    }

    /// Edge features `(B, n, n, d)` before the readout heads.
    fn trunk(&self, x: &DiffusionState, sc: &DiffusionState, c_noise: &Tensor) -> Result<Tensor> {
        let cfg = &self.cfg;
        let n = x.edges.dim(1)?;
        let p = cfg.patch_size;
        let m = cfg.window_size;
        let l = cfg.padded_size(n);
        let input = self.input_features(x, sc)?;
        let input = input.pad_with_zeros(1, 0, l - n)?.pad_with_zeros(2, 0, l - n)?;
        let cond = self.cond_mlp.forward(&fourier_features(c_noise, 2 * (cfg.token_dim / 2).max(1))?)?.gelu_erf()?;

        let mut grid = l / p;
        let mut valid = n.div_ceil(p);
        let mut masks = Vec::new();
        for _ in 0..cfg.stages() {
            masks.push(StageMasks::new(grid, m, valid, self.dtype, &self.device)?);
            grid /= 2;
            valid = valid.div_ceil(2);
        }

        let mut h = self.embed.forward(&patchify(&input, p)?)?;
        let mut skips = Vec::new();
        for (i, stage) in self.encoder.iter().enumerate() {
            h = stage.forward(&h, &cond, &masks[i])?;
            skips.push(h.clone());
            if let Some(down) = self.downs.get(i) {
                h = down.forward(&h)?;
            }
        }
        let last = cfg.stages() - 1;
        h = self.bottleneck.forward(&h, &cond, &masks[last])?;
        for i in (0..cfg.stages()).rev() {
            if let Some(up) = &self.ups[i] {
                h = up.forward(&h)?;
            }
            h = self.merges[i].forward(&Tensor::cat(&[&h, &skips[i]], 3)?)?;
            h = self.decoder[i].forward(&h, &cond, &masks[i])?;
        }
        let h = unpatchify(&self.unembed.forward(&self.norm.forward(&h)?)?, p)?;
        Ok(h.narrow(1, 0, n)?.narrow(2, 0, n)?)
    }
}

impl RawNetwork for SwinGnn {
    fn forward(&self, x: &DiffusionState, sc: &DiffusionState, c_noise: &Tensor) -> Result<DiffusionState> {
        let h = self.trunk(x, sc, c_noise)?;
        let edges = self.edge_head.forward(&h)?;
        let nodes = match &self.node_head {
            Some(head) => Some(head.forward(&h.mean(2)?)?),
            None => None,
        };
        let out = DiffusionState { edges, nodes };
        if !out.is_finite()? {
            return Err(Error::TrainingDiverged("non-finite network output".into()));
        }
        Ok(out)
    }

    fn dtype(&self) -> DType {
        self.dtype
    }

    fn device(&self) -> Device {
        self.device.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(dims: &[usize]) -> Tensor {
        let count: usize = dims.iter().product();
        Tensor::from_vec((0..count).map(|i| i as f32).collect::<Vec<_>>(), dims, &Device::Cpu).unwrap()
    }

    fn values(t: &Tensor) -> Vec<f32> {
        t.flatten_all().unwrap().to_vec1().unwrap()
    }

    #[test]
    fn parity_split_of_constant_two_by_two() {
        let x = Tensor::from_vec(vec![1f32, 2., 3., 4.], (1, 2, 2, 1), &Device::Cpu).unwrap();
        let y = parity_split(&x).unwrap();
        assert_eq!(y.dims(), &[1, 1, 1, 4]);
        // (row, col) order: (0,0), (1,0), (0,1), (1,1)
        assert_eq!(values(&y), vec![1., 3., 2., 4.]);
    }

    #[test]
    fn parity_merge_inverts_split() {
        let x = seq(&[2, 8, 8, 3]);
        assert_eq!(values(&parity_merge(&parity_split(&x).unwrap()).unwrap()), values(&x));
        assert!(parity_split(&seq(&[1, 3, 4, 1])).is_err());
    }

    #[test]
    fn patch_shapes() {
        let x = seq(&[1, 8, 8, 2]);
        assert_eq!(patchify(&x, 4).unwrap().dims(), &[1, 2, 2, 32]);
        assert_eq!(patchify(&x, 1).unwrap().dims(), &[1, 8, 8, 2]);
        for n in [8, 12, 16] {
            for p in [1, 2, 4] {
                let x = seq(&[1, n, n, 3]);
                assert_eq!(values(&unpatchify(&patchify(&x, p).unwrap(), p).unwrap()), values(&x));
            }
        }
    }

    #[test]
    fn padding_unit() {
        let cfg = ModelConfig::standard();
        assert_eq!(cfg.padded_size(16), 192);
        let small = ModelConfig {
            patch_size: 2,
            window_size: 4,
            heads: vec![2, 4],
            down_layers: vec![1, 1],
            up_layers: vec![1, 1],
            ..ModelConfig::standard()
        };
        assert_eq!(small.padded_size(16), 16);
        assert_eq!(small.padded_size(17), 32);
    }

    #[test]
    fn mismatched_lists_are_rejected() {
        let cfg = ModelConfig {
            down_layers: vec![4, 4, 6],
            up_layers: vec![4, 4, 6],
            ..ModelConfig::standard()
        };
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig {
            heads: vec![7, 6, 12, 24],
            ..ModelConfig::standard()
        };
        assert!(cfg.validate().is_err());
    }
}
