//! Safetensors checkpoint: raw parameters under `raw.<name>`, averaged
//! parameters under `ema.<name>`, and the config, progress counters, padding
//! size and RNG state as string metadata.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use rand_chacha::ChaCha8Rng;
use safetensors::tensor::{Dtype, SafeTensors, TensorView};

use crate::config::Config;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub raw: BTreeMap<String, Tensor>,
    pub ema: BTreeMap<String, Tensor>,
    pub config: Config,
    pub epoch: usize,
    pub step: usize,
    /// Training stream, positioned after the last completed step.
    pub rng: ChaCha8Rng,
    /// Side length the model samples at.
    pub max_n: usize,
    pub variable_size: bool,
}

fn bytes(t: &Tensor) -> Result<(Dtype, Vec<u8>)> {
    let flat = t.flatten_all()?;
    Ok(match t.dtype() {
        DType::F32 => (Dtype::F32, flat.to_vec1::<f32>()?.iter().flat_map(|v| v.to_le_bytes()).collect()),
        DType::F64 => (Dtype::F64, flat.to_vec1::<f64>()?.iter().flat_map(|v| v.to_le_bytes()).collect()),
        other => return Err(Error::Checkpoint(format!("unsupported dtype {other:?}"))),
    })
}

fn tensor(view: &TensorView<'_>) -> Result<Tensor> {
    let shape = view.shape().to_vec();
    let data = view.data();
    let t = match view.dtype() {
        Dtype::F32 => {
            let v: Vec<f32> = data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            Tensor::from_vec(v, shape, &Device::Cpu)?
        }
        Dtype::F64 => {
            let v: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            Tensor::from_vec(v, shape, &Device::Cpu)?
        }
        other => return Err(Error::Checkpoint(format!("unsupported dtype {other:?}"))),
    };
    Ok(t)
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut encoded = Vec::new();
        for (prefix, map) in [("raw", &self.raw), ("ema", &self.ema)] {
            for (name, t) in map {
                let (dtype, data) = bytes(t)?;
                encoded.push((format!("{prefix}.{name}"), dtype, t.dims().to_vec(), data));
            }
        }
        let views = encoded
            .iter()
            .map(|(name, dtype, shape, data)| Ok((name.clone(), TensorView::new(*dtype, shape.clone(), data)?)))
            .collect::<Result<Vec<_>, safetensors::SafeTensorError>>()
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let meta = HashMap::from([
            ("config".to_string(), self.config.to_toml()?),
            ("epoch".to_string(), self.epoch.to_string()),
            ("step".to_string(), self.step.to_string()),
            ("max_n".to_string(), self.max_n.to_string()),
            ("variable_size".to_string(), self.variable_size.to_string()),
            (
                "rng".to_string(),
                serde_json::to_string(&self.rng).map_err(|e| Error::Checkpoint(e.to_string()))?,
            ),
        ]);
        safetensors::serialize(views, Some(meta)).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_bytes(buffer: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let (_, header) = SafeTensors::read_metadata(buffer).map_err(|e| bad(e.to_string()))?;
        let meta = header.metadata().clone().ok_or_else(|| bad("missing metadata".into()))?;
        let field = |k: &str| meta.get(k).ok_or_else(|| bad(format!("missing metadata field {k}")));
        let number = |k: &str| -> Result<usize> { field(k)?.parse().map_err(|_| bad(format!("malformed {k}"))) };
        let config = Config::from_toml(field("config")?)?;
        let rng = serde_json::from_str(field("rng")?).map_err(|e| bad(format!("rng state: {e}")))?;
        let tensors = SafeTensors::deserialize(buffer).map_err(|e| bad(e.to_string()))?;
        let mut raw = BTreeMap::new();
        let mut ema = BTreeMap::new();
        for (name, view) in tensors.tensors() {
            let t = tensor(&view)?;
            match name.split_once('.') {
                Some(("raw", rest)) => raw.insert(rest.to_string(), t),
                Some(("ema", rest)) => ema.insert(rest.to_string(), t),
                _ => return Err(bad(format!("unexpected tensor {name}"))),
            };
        }
        if raw.keys().ne(ema.keys()) {
            return Err(bad("raw and averaged parameter names differ".into()));
        }
        Ok(Self {
            raw,
            ema,
            config,
            epoch: number("epoch")?,
            step: number("step")?,
            rng,
            max_n: number("max_n")?,
            variable_size: field("variable_size")? == "true",
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        // write-then-rename so an interrupted save never clobbers the previous file
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()?).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buffer = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buffer)
    }
}
