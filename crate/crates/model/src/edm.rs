//! EDM preconditioning, noise schedules, the training objective and
//! self-conditioning.

use candle_core::{DType, Device, Tensor};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use swingnn_core::datasets::Batch;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdmConfig {
    pub sigma_d: f64,
    pub p_mean: f64,
    pub p_std: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub rho: f64,
    pub s_tmin: f64,
    pub s_tmax: f64,
    pub s_noise: f64,
    pub s_churn: f64,
    pub steps: usize,
}

impl Default for EdmConfig {
    fn default() -> Self {
        Self {
            sigma_d: 0.5,
            p_mean: -1.2,
            p_std: 1.2,
            sigma_min: 0.002,
            sigma_max: 80.0,
            rho: 7.0,
            s_tmin: 0.05,
            s_tmax: 50.0,
            s_noise: 1.003,
            s_churn: 40.0,
            steps: 256,
        }
    }
}

impl EdmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max) {
            return bad("need 0 < sigma_min < sigma_max");
        }
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if self.rho <= 0.0 {
            return bad("rho must be positive");
        }
        if self.s_noise < 1.0 {
            return bad("s_noise must be at least 1");
        }
        if self.sigma_d <= 0.0 || self.p_std < 0.0 || self.s_churn < 0.0 {
            return bad("sigma_d must be positive; p_std and s_churn non-negative");
        }
        Ok(())
    }

    /// Noise-free second-order solve: no churn and unit noise scale.
    pub fn deterministic(mut self) -> Self {
        self.s_churn = 0.0;
        self.s_noise = 1.0;
        self
    }
}

/// `(c_skip, c_out, c_in, c_noise)` at one noise level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coeffs {
    pub c_skip: f64,
    pub c_out: f64,
    pub c_in: f64,
    pub c_noise: f64,
}

impl Coeffs {
    /// Loss weight `λ(σ) = 1/c_out²`.
    pub fn weight(&self) -> f64 {
        1.0 / (self.c_out * self.c_out)
    }
}

pub fn precondition_coeffs(sigma: f64, cfg: &EdmConfig) -> Result<Coeffs> {
    if !(sigma > 0.0) {
        return Err(Error::Config(format!("noise level must be positive, got {sigma}")));
    }
    let sd2 = cfg.sigma_d * cfg.sigma_d;
    let s2 = sigma * sigma;
    Ok(Coeffs {
        c_skip: sd2 / (sd2 + s2),
        c_out: sigma * cfg.sigma_d / (s2 + sd2).sqrt(),
        c_in: 1.0 / (s2 + sd2).sqrt(),
        c_noise: sigma.ln() / 4.0,
    })
}

/// `ln σ ~ N(P_mean, P_std²)`.
pub fn sample_training_sigma<R: Rng + ?Sized>(rng: &mut R, cfg: &EdmConfig) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (cfg.p_mean + cfg.p_std * z).exp()
}

/// `t_0 … t_{N−1}` followed by `t_N = 0`.
pub fn time_grid(cfg: &EdmConfig) -> Vec<f64> {
    let n = cfg.steps;
    let inv = 1.0 / cfg.rho;
    let (hi, lo) = (cfg.sigma_max.powf(inv), cfg.sigma_min.powf(inv));
    let mut t: Vec<f64> = (0..n)
        .map(|i| {
            let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            (hi + frac * (lo - hi)).powf(cfg.rho)
        })
        .collect();
    t.push(0.0);
    t
}

pub fn gamma(t: f64, cfg: &EdmConfig) -> f64 {
    if (cfg.s_tmin..=cfg.s_tmax).contains(&t) {
        (cfg.s_churn / cfg.steps as f64).min(2f64.sqrt() - 1.0)
    } else {
        0.0
    }
}

/// Edge tensor `(B, n, n, C_e)` and optional node tensor `(B, n, C_v)`.
#[derive(Clone, Debug)]
pub struct DiffusionState {
    pub edges: Tensor,
    pub nodes: Option<Tensor>,
}

impl DiffusionState {
    pub fn new(edges: Tensor, nodes: Option<Tensor>) -> Self {
        Self { edges, nodes }
    }

    /// Tensors for a padded dataset batch.
    pub fn from_batch(batch: &Batch, dtype: DType, device: &Device) -> Result<Self> {
        let (b, n) = (batch.len, batch.max_n);
        let edges = Tensor::from_slice(&batch.edges, (b, n, n, batch.edge_channels), device)?.to_dtype(dtype)?;
        let nodes = if batch.node_channels > 0 {
            Some(Tensor::from_slice(&batch.nodes, (b, n, batch.node_channels), device)?.to_dtype(dtype)?)
        } else {
            None
        };
        Ok(Self { edges, nodes })
    }

    pub fn batch(&self) -> usize {
        self.edges.dims()[0]
    }

    pub fn dtype(&self) -> DType {
        self.edges.dtype()
    }

    pub fn device(&self) -> &Device {
        self.edges.device()
    }

    pub fn map(&self, f: impl Fn(&Tensor) -> candle_core::Result<Tensor>) -> Result<Self> {
        Ok(Self {
            edges: f(&self.edges)?,
            nodes: self.nodes.as_ref().map(&f).transpose()?,
        })
    }

    pub fn zip(&self, other: &Self, f: impl Fn(&Tensor, &Tensor) -> candle_core::Result<Tensor>) -> Result<Self> {
        let nodes = match (&self.nodes, &other.nodes) {
            (Some(a), Some(b)) => Some(f(a, b)?),
            (None, None) => None,
            _ => return Err(Error::Shape("node features present on one side only".into())),
        };
        Ok(Self {
            edges: f(&self.edges, &other.edges)?,
            nodes,
        })
    }

    pub fn zeros_like(&self) -> Result<Self> {
        self.map(|t| t.zeros_like())
    }

    pub fn detach(&self) -> Self {
        Self {
            edges: self.edges.detach(),
            nodes: self.nodes.as_ref().map(Tensor::detach),
        }
    }

    /// Multiplies item `b` by `coeffs[b]`.
    pub fn scale_items(&self, coeffs: &[f64]) -> Result<Self> {
        let b = self.batch();
        if coeffs.len() != b {
            return Err(Error::Shape(format!("{} coefficients for batch {b}", coeffs.len())));
        }
        let c = Tensor::from_slice(coeffs, b, self.device())?.to_dtype(self.dtype())?;
        self.map(|t| {
            let mut shape = vec![b];
            shape.resize(t.rank(), 1);
            t.broadcast_mul(&c.reshape(shape)?)
        })
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        self.map(|t| t.affine(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    /// Sum over all entries of every item, as `(B,)`.
    pub fn per_item_sum(&self) -> Result<Tensor> {
        let b = self.batch();
        let mut s = self.edges.reshape((b, ()))?.sum(1)?;
        if let Some(n) = &self.nodes {
            s = (s + n.reshape((b, ()))?.sum(1)?)?;
        }
        Ok(s)
    }

    pub fn is_finite(&self) -> Result<bool> {
        let check = |t: &Tensor| -> Result<bool> {
            let s = t.detach().to_dtype(DType::F64)?.abs()?.sum_all()?.to_scalar::<f64>()?;
            Ok(s.is_finite())
        };
        Ok(check(&self.edges)? && self.nodes.as_ref().map_or(Ok(true), check)?)
    }

    /// Row-major values of item `b`'s edge tensor.
    pub fn item_edges(&self, b: usize) -> Result<Vec<f64>> {
        Ok(self.edges.get(b)?.to_dtype(DType::F64)?.flatten_all()?.to_vec1()?)
    }

    pub fn item_nodes(&self, b: usize) -> Result<Option<Vec<f64>>> {
        self.nodes
            .as_ref()
            .map(|n| Ok(n.get(b)?.to_dtype(DType::F64)?.flatten_all()?.to_vec1()?))
            .transpose()
    }
}

/// Shape of a diffusion state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateShape {
    pub batch: usize,
    pub n: usize,
    pub edge_channels: usize,
    pub node_channels: usize,
}

/// I.i.d. standard normal state drawn from `rng`.
pub fn normal_state<R: Rng + ?Sized>(shape: StateShape, rng: &mut R, dtype: DType, device: &Device) -> Result<DiffusionState> {
    let mut draw = |dims: Vec<usize>| -> Result<Tensor> {
        let count: usize = dims.iter().product();
        let v: Vec<f64> = (0..count).map(|_| StandardNormal.sample(rng)).collect();
        Ok(Tensor::from_vec(v, dims, device)?.to_dtype(dtype)?)
    };
    let edges = draw(vec![shape.batch, shape.n, shape.n, shape.edge_channels])?;
    let nodes = if shape.node_channels > 0 {
        Some(draw(vec![shape.batch, shape.n, shape.node_channels])?)
    } else {
        None
    };
    Ok(DiffusionState { edges, nodes })
}

/// `D(Ã, Â_sc, σ)`: the denoised estimate given a noisy state, a
/// self-conditioning state and one noise level per batch item.
pub trait Denoiser {
    fn denoise(&self, noisy: &DiffusionState, self_cond: &DiffusionState, sigma: &[f64]) -> Result<DiffusionState>;
    fn dtype(&self) -> DType;
    fn device(&self) -> Device {
        Device::Cpu
    }
}

/// `F(c_in·Ã, Â_sc, c_noise)`: the raw network inside the preconditioning.
pub trait RawNetwork {
    fn forward(&self, scaled_noisy: &DiffusionState, self_cond: &DiffusionState, c_noise: &Tensor) -> Result<DiffusionState>;
    fn dtype(&self) -> DType;
    fn device(&self) -> Device {
        Device::Cpu
    }
}

impl<T: RawNetwork + ?Sized> RawNetwork for &T {
    fn forward(&self, x: &DiffusionState, sc: &DiffusionState, c: &Tensor) -> Result<DiffusionState> {
        (**self).forward(x, sc, c)
    }
    fn dtype(&self) -> DType {
        (**self).dtype()
    }
    fn device(&self) -> Device {
        (**self).device()
    }
}

fn coeffs_for(sigma: &[f64], cfg: &EdmConfig) -> Result<Vec<Coeffs>> {
    sigma.iter().map(|&s| precondition_coeffs(s, cfg)).collect()
}

/// Runs the raw network with the input and noise scalings; returns `F`.
pub fn raw_output<N: RawNetwork + ?Sized>(
    net: &N,
    noisy: &DiffusionState,
    self_cond: &DiffusionState,
    sigma: &[f64],
    cfg: &EdmConfig,
) -> Result<DiffusionState> {
    let c = coeffs_for(sigma, cfg)?;
    let c_in: Vec<f64> = c.iter().map(|c| c.c_in).collect();
    let c_noise: Vec<f64> = c.iter().map(|c| c.c_noise).collect();
    let c_noise = Tensor::from_slice(&c_noise, c_noise.len(), noisy.device())?.to_dtype(net.dtype())?;
    net.forward(&noisy.scale_items(&c_in)?, self_cond, &c_noise)
}

/// `D = c_skip·Ã + c_out·F(c_in·Ã, Â_sc, c_noise)`.
#[derive(Clone, Debug)]
pub struct Preconditioned<N> {
    pub net: N,
    pub cfg: EdmConfig,
}

impl<N: RawNetwork> Preconditioned<N> {
    pub fn new(net: N, cfg: EdmConfig) -> Self {
        Self { net, cfg }
    }
}

impl<N: RawNetwork> Denoiser for Preconditioned<N> {
    fn denoise(&self, noisy: &DiffusionState, self_cond: &DiffusionState, sigma: &[f64]) -> Result<DiffusionState> {
        let c = coeffs_for(sigma, &self.cfg)?;
        let f = raw_output(&self.net, noisy, self_cond, sigma, &self.cfg)?;
        let skip: Vec<f64> = c.iter().map(|c| c.c_skip).collect();
        let out: Vec<f64> = c.iter().map(|c| c.c_out).collect();
        noisy.scale_items(&skip)?.add(&f.scale_items(&out)?)
    }

    fn dtype(&self) -> DType {
        self.net.dtype()
    }

    fn device(&self) -> Device {
        self.net.device()
    }
}

/// Which self-conditioning input a training step uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelfCondBranch {
    Zeros,
    Denoise,
}

impl SelfCondBranch {
    /// Each branch with probability ½.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            Self::Denoise
        } else {
            Self::Zeros
        }
    }
}

/// Zeros, or `D(Ã, 0, σ)` with gradients cut.
pub fn self_conditioning_input<D: Denoiser + ?Sized>(
    noisy: &DiffusionState,
    sigma: &[f64],
    denoiser: &D,
    branch: SelfCondBranch,
) -> Result<DiffusionState> {
    let zeros = noisy.zeros_like()?;
    match branch {
        SelfCondBranch::Zeros => Ok(zeros),
        SelfCondBranch::Denoise => Ok(denoiser.denoise(&noisy.detach(), &zeros, sigma)?.detach()),
    }
}

/// One training batch: clean data, noise levels, noise and self-conditioning
/// branch. Splitting the draws from the loss keeps the loss a pure function.
#[derive(Clone, Debug)]
pub struct TrainingDraw {
    pub sigma: Vec<f64>,
    pub noise: DiffusionState,
    pub branch: SelfCondBranch,
}

impl TrainingDraw {
    pub fn sample<R: Rng + ?Sized>(clean: &DiffusionState, rng: &mut R, cfg: &EdmConfig) -> Result<Self> {
        let sigma: Vec<f64> = (0..clean.batch()).map(|_| sample_training_sigma(rng, cfg)).collect();
        let shape = StateShape {
            batch: clean.batch(),
            n: clean.edges.dims()[1],
            edge_channels: clean.edges.dims()[3],
            node_channels: clean.nodes.as_ref().map_or(0, |n| n.dims()[2]),
        };
        let noise = normal_state(shape, rng, clean.dtype(), clean.device())?;
        Ok(Self {
            sigma,
            noise,
            branch: SelfCondBranch::draw(rng),
        })
    }
}

/// `mean_b ‖F − (A − c_skip·Ã)/c_out‖²` with `Ã = A + σε`.
pub fn training_loss<N: RawNetwork>(
    net: &N,
    clean: &DiffusionState,
    draw: &TrainingDraw,
    cfg: &EdmConfig,
) -> Result<Tensor> {
    let noisy = clean.add(&draw.noise.scale_items(&draw.sigma)?)?;
    let wrapper = Preconditioned::new(net, cfg.clone());
    let sc = self_conditioning_input(&noisy, &draw.sigma, &wrapper, draw.branch)?;
    let f = raw_output(net, &noisy, &sc, &draw.sigma, cfg)?;
    let target = regression_target(clean, &noisy, &draw.sigma, cfg)?;
    let loss = f.sub(&target)?.map(|t| t.sqr())?.per_item_sum()?.mean_all()?;
    let value = loss.to_dtype(DType::F64)?.to_scalar::<f64>()?;
    if !value.is_finite() {
        return Err(Error::TrainingDiverged(format!("loss is {value}")));
    }
    Ok(loss)
}

/// `(A − c_skip·Ã)/c_out` per item.
pub fn regression_target(clean: &DiffusionState, noisy: &DiffusionState, sigma: &[f64], cfg: &EdmConfig) -> Result<DiffusionState> {
    let c = coeffs_for(sigma, cfg)?;
    let skip: Vec<f64> = c.iter().map(|c| c.c_skip).collect();
    let inv_out: Vec<f64> = c.iter().map(|c| 1.0 / c.c_out).collect();
    clean.sub(&noisy.scale_items(&skip)?)?.scale_items(&inv_out)
}

/// `mean_b λ(σ_b)·‖D_b − A_b‖²`, the denoiser form of the objective.
pub fn weighted_denoiser_loss(denoised: &DiffusionState, clean: &DiffusionState, sigma: &[f64], cfg: &EdmConfig) -> Result<Tensor> {
    let weights: Vec<f64> = coeffs_for(sigma, cfg)?.iter().map(Coeffs::weight).collect();
    let per_item = denoised.sub(clean)?.map(|t| t.sqr())?.per_item_sum()?;
    let w = Tensor::from_slice(&weights, weights.len(), per_item.device())?.to_dtype(per_item.dtype())?;
    Ok((per_item * w)?.mean_all()?)
}
