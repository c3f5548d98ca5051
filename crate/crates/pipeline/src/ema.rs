use std::collections::BTreeMap;

use candle_core::Tensor;

use crate::error::{Error, Result};

/// `ema ← decay·ema + (1 − decay)·params` for every named tensor.
pub fn ema_update(ema: &mut BTreeMap<String, Tensor>, params: &BTreeMap<String, Tensor>, decay: f64) -> Result<()> {
    if ema.len() != params.len() {
        return Err(Error::Shape(format!("{} averaged tensors for {} parameters", ema.len(), params.len())));
    }
    for (name, p) in params {
        let e = ema.get(name).ok_or_else(|| Error::Shape(format!("no average kept for {name}")))?;
        if e.dims() != p.dims() {
            return Err(Error::Shape(format!("{name}: average {:?}, parameter {:?}", e.dims(), p.dims())));
        }
    }
    for (name, p) in params {
        let e = ema.get_mut(name).expect("checked above");
        *e = (e.affine(decay, 0.0)? + p.detach().affine(1.0 - decay, 0.0)?)?;
    }
    Ok(())
}
