//! Named trainable parameters with seeded initialization.

use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Normal with the given std, resampled outside two std.
    TruncatedNormal(f64),
    Zeros,
    Ones,
}

/// Owns every `Var` of a model by name. Requests for an existing name reuse
/// the stored value, so a store filled from a checkpoint rebuilds that model.
#[derive(Debug)]
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
    dtype: DType,
    device: Device,
    rng: ChaCha8Rng,
}

impl ParamStore {
    pub fn new(seed: u64, dtype: DType, device: Device) -> Self {
        Self {
            vars: BTreeMap::new(),
            dtype,
            device,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A store pre-filled with `tensors`, converted to `dtype`.
    pub fn from_tensors(tensors: &BTreeMap<String, Tensor>, dtype: DType, device: Device) -> Result<Self> {
        let mut store = Self::new(0, dtype, device);
        for (name, t) in tensors {
            let t = t.to_device(&store.device)?.to_dtype(dtype)?;
            store.vars.insert(name.clone(), Var::from_tensor(&t)?);
        }
        Ok(store)
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn get_or_init(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Tensor> {
        if let Some(v) = self.vars.get(name) {
            if v.dims() != shape {
                return Err(Error::Shape(format!("{name}: stored {:?}, requested {shape:?}", v.dims())));
            }
            return Ok(v.as_tensor().clone());
        }
        let count: usize = shape.iter().product();
        let values: Vec<f64> = match init {
            Init::Zeros => vec![0.0; count],
            Init::Ones => vec![1.0; count],
            Init::TruncatedNormal(std) => (0..count)
                .map(|_| loop {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    if z.abs() <= 2.0 {
                        break z * std;
                    }
                })
                .collect(),
        };
        let t = Tensor::from_vec(values, shape, &self.device)?.to_dtype(self.dtype)?;
        let var = Var::from_tensor(&t)?;
        let out = var.as_tensor().clone();
        self.vars.insert(name.to_string(), var);
        Ok(out)
    }

    pub fn vars(&self) -> Vec<Var> {
        self.vars.values().cloned().collect()
    }

    pub fn named_vars(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }

    pub fn var(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    /// Detached copies of every parameter.
    pub fn snapshot(&self) -> BTreeMap<String, Tensor> {
        self.vars
            .iter()
            .map(|(k, v)| (k.clone(), v.as_detached_tensor().copy().expect("cpu copy")))
            .collect()
    }

    /// Overwrites stored values in place; every name must exist with the same shape.
    pub fn load(&self, tensors: &BTreeMap<String, Tensor>) -> Result<()> {
        for (name, var) in &self.vars {
            let t = tensors.get(name).ok_or_else(|| Error::MissingParameter(name.clone()))?;
            if t.dims() != var.dims() {
                return Err(Error::Shape(format!("{name}: stored {:?}, loading {:?}", var.dims(), t.dims())));
            }
            var.set(&t.to_dtype(self.dtype)?)?;
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Draws from the store's own stream, for callers that need extra seeded values.
    pub fn rng(&mut self) -> &mut impl Rng {
        &mut self.rng
    }
}
