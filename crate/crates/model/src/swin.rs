//! Window partitioning and shifted-window self-attention over square token grids.

use candle_core::{DType, Device, Tensor};

use crate::error::{Error, Result};
use crate::layers::{LayerNorm, Linear, Mlp, INIT_STD};
use crate::params::{Init, ParamStore};

/// Additive logit for disallowed query/key pairs.
pub const MASK_VALUE: f64 = -1e4;

/// `(B, H, W, C)` → `(B·(H/M)·(W/M), M, M, C)`, windows in row-major order per image.
pub fn window_partition(x: &Tensor, m: usize) -> Result<Tensor> {
    let (b, h, w, c) = x.dims4()?;
    if m == 0 || h % m != 0 || w % m != 0 {
        return Err(Error::Shape(format!("{h}x{w} grid is not tiled by {m}x{m} windows")));
    }
    Ok(x.reshape((b, h / m, m, w / m, m, c))?
        .permute((0, 1, 3, 2, 4, 5))?
        .contiguous()?
        .reshape((b * (h / m) * (w / m), m, m, c))?)
}

/// Inverse of [`window_partition`] for a `(batch, h, w)` grid.
pub fn window_reverse(windows: &Tensor, batch: usize, h: usize, w: usize) -> Result<Tensor> {
    let (_, m, _, c) = windows.dims4()?;
    Ok(windows
        .reshape((batch, h / m, w / m, m, m, c))?
        .permute((0, 1, 3, 2, 4, 5))?
        .contiguous()?
        .reshape((batch, h, w, c))?)
}

/// Flattened `(M², M²)` lookup into the `(2M−1)²` relative-offset table.
pub fn relative_position_index(m: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(m.pow(4));
    let span = 2 * m - 1;
    for a in 0..m * m {
        for b in 0..m * m {
            let dr = a / m + m - 1 - b / m;
            let dc = a % m + m - 1 - b % m;
            out.push((dr * span + dc) as u32);
        }
    }
    out
}

/// Additive attention mask `(nW, M², M²)` for a `g×g` grid rolled by `-shift`,
/// where only the first `valid` rows and columns hold real tokens. Keys in the
/// padding and, for shifted windows, keys from a different pre-roll region are
/// masked.
pub fn attention_mask(g: usize, m: usize, shift: usize, valid: usize) -> Vec<f64> {
    let region = |i: usize| {
        if shift == 0 || i < g - m {
            0
        } else if i < g - shift {
            1
        } else {
            2
        }
    };
    let windows = g / m;
    let n = m * m;
    let mut out = vec![0.0; windows * windows * n * n];
    for wr in 0..windows {
        for wc in 0..windows {
            let base = (wr * windows + wc) * n * n;
            let pos = |t: usize| (wr * m + t / m, wc * m + t % m);
            for q in 0..n {
                let (qr, qc) = pos(q);
                for k in 0..n {
                    let (kr, kc) = pos(k);
                    let orig = ((kr + shift) % g, (kc + shift) % g);
                    let mut v = 0.0;
                    if orig.0 >= valid || orig.1 >= valid {
                        v += MASK_VALUE;
                    }
                    if region(qr) != region(kr) || region(qc) != region(kc) {
                        v += MASK_VALUE;
                    }
                    out[base + q * n + k] = v;
                }
            }
        }
    }
    out
}

/// Masks for one stage of a `g×g` grid: unshifted and half-window shifted.
#[derive(Clone, Debug)]
pub struct StageMasks {
    pub grid: usize,
    pub window: usize,
    pub plain: Tensor,
    pub shifted: Tensor,
}

impl StageMasks {
    pub fn new(grid: usize, window: usize, valid: usize, dtype: DType, device: &Device) -> Result<Self> {
        let shape = ((grid / window).pow(2), window * window, window * window);
        let build = |shift| -> Result<Tensor> {
            Ok(Tensor::from_vec(attention_mask(grid, window, shift, valid), shape, device)?.to_dtype(dtype)?)
        };
        Ok(Self {
            grid,
            window,
            plain: build(0)?,
            shifted: build(Self::shift_for(grid, window))?,
        })
    }

    /// Half-window shift, or none when one window covers the grid.
    pub fn shift_for(grid: usize, window: usize) -> usize {
        if grid <= window {
            0
        } else {
            window / 2
        }
    }
}

#[derive(Clone, Debug)]
pub struct WindowAttention {
    qkv: Linear,
    proj: Linear,
    bias_table: Tensor,
    bias_index: Tensor,
    heads: usize,
    window: usize,
}

impl WindowAttention {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, heads: usize, window: usize) -> Result<Self> {
        if heads == 0 || dim % heads != 0 {
            return Err(Error::Config(format!("{heads} heads do not divide dimension {dim}")));
        }
        let span = 2 * window - 1;
        let bias_table = store.get_or_init(
            &format!("{name}.relative_position_bias"),
            &[span * span, heads],
            Init::TruncatedNormal(INIT_STD),
        )?;
        let bias_index = Tensor::new(relative_position_index(window), store.device())?;
        Ok(Self {
            qkv: Linear::new(store, &format!("{name}.qkv"), dim, 3 * dim, true)?,
            proj: Linear::new(store, &format!("{name}.proj"), dim, dim, true)?,
            bias_table,
            bias_index,
            heads,
            window,
        })
    }

    /// `windows`: `(B·nW, M², C)`; `mask`: `(nW, M², M²)`.
    pub fn forward(&self, windows: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let (bw, n, c) = windows.dims3()?;
        let h = self.heads;
        let hd = c / h;
        let nw = mask.dim(0)?;
        let qkv = self.qkv.forward(windows)?.reshape((bw, n, 3, h, hd))?.permute((2, 0, 3, 1, 4))?;
        let q = (qkv.get(0)?.contiguous()? * (hd as f64).powf(-0.5))?;
        let k = qkv.get(1)?.contiguous()?;
        let v = qkv.get(2)?.contiguous()?;
        let attn = q.matmul(&k.t()?.contiguous()?)?;
        let bias = self
            .bias_table
            .index_select(&self.bias_index, 0)?
            .reshape((n, n, h))?
            .permute((2, 0, 1))?
            .unsqueeze(0)?;
        let attn = attn.broadcast_add(&bias)?;
        let attn = attn
            .reshape((bw / nw, nw, h, n, n))?
            .broadcast_add(&mask.reshape((1, nw, 1, n, n))?)?
            .reshape((bw, h, n, n))?;
        let attn = candle_nn::ops::softmax(&attn, 3)?;
        let out = attn.matmul(&v)?.transpose(1, 2)?.contiguous()?.reshape((bw, n, c))?;
        self.proj.forward(&out)
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

/// Pre-norm transformer block on a token grid with noise-level injection.
#[derive(Clone, Debug)]
pub struct SwinBlock {
    cond: Linear,
    norm1: LayerNorm,
    attn: WindowAttention,
    norm2: LayerNorm,
    mlp: Mlp,
    shifted: bool,
}

impl SwinBlock {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        dim: usize,
        heads: usize,
        window: usize,
        cond_dim: usize,
        shifted: bool,
    ) -> Result<Self> {
        Ok(Self {
            cond: Linear::new(store, &format!("{name}.cond"), cond_dim, dim, true)?,
            norm1: LayerNorm::new(store, &format!("{name}.norm1"), dim)?,
            attn: WindowAttention::new(store, &format!("{name}.attn"), dim, heads, window)?,
            norm2: LayerNorm::new(store, &format!("{name}.norm2"), dim)?,
            mlp: Mlp::new(store, &format!("{name}.mlp"), dim, 4 * dim, dim)?,
            shifted,
        })
    }

    /// `x`: `(B, G, G, C)`; `cond`: `(B, E)`.
    pub fn forward(&self, x: &Tensor, cond: &Tensor, masks: &StageMasks) -> Result<Tensor> {
        let (b, g, _, c) = x.dims4()?;
        let m = masks.window;
        let shift = if self.shifted { StageMasks::shift_for(g, m) } else { 0 };
        let mask = if shift > 0 { &masks.shifted } else { &masks.plain };
        let x = x.broadcast_add(&self.cond.forward(cond)?.reshape((b, 1, 1, c))?)?;
        let mut h = self.norm1.forward(&x)?;
        if shift > 0 {
            h = h.roll(-(shift as i32), 1)?.roll(-(shift as i32), 2)?;
        }
        let windows = window_partition(&h, m)?.reshape(((), m * m, c))?;
        let out = self.attn.forward(&windows, mask)?.reshape(((), m, m, c))?;
        let mut h = window_reverse(&out, b, g, g)?;
        if shift > 0 {
            h = h.roll(shift as i32, 1)?.roll(shift as i32, 2)?;
        }
        let x = (x + h)?;
        let y = self.mlp.forward(&self.norm2.forward(&x)?)?;
        Ok((x + y)?)
    }
}
