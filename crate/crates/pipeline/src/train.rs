//! Adam training of the denoiser on a graph set, with parameter averaging.

use std::io::Write;

use candle_core::{DType, Device};
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swingnn_core::datasets::batch;
use swingnn_model::edm::{training_loss, DiffusionState, TrainingDraw};
use swingnn_model::{ParamStore, SwinGnn};

use crate::checkpoint::Checkpoint;
use crate::config::Config;
use crate::data::Dataset;
use crate::ema::ema_update;
use crate::error::{Error, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.safetensors";
pub const LOSS_FILE: &str = "losses.csv";

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Batch loss after every optimizer step.
    pub losses: Vec<f64>,
}

/// Parameters are initialized from `seed` and the data/noise stream from
/// stream 1 of the same seed, so runs are reproducible bit for bit.
fn training_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub fn train(cfg: &Config, data: &Dataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    let t = &cfg.train;
    let mut store = ParamStore::new(t.seed, DType::F32, Device::Cpu);
    let net = SwinGnn::new(&cfg.model, &mut store)?;
    let mut rng = training_rng(t.seed);
    let mut ema = store.snapshot();
    let mut opt = AdamW::new(
        store.vars(),
        ParamsAdamW {
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            eps: t.eps,
            weight_decay: 0.0,
        },
    )?;
    let snapshot = |store: &ParamStore, ema: &std::collections::BTreeMap<_, _>, rng: &ChaCha8Rng, epoch, step| Checkpoint {
        raw: store.snapshot(),
        ema: ema.clone(),
        config: cfg.clone(),
        epoch,
        step,
        rng: rng.clone(),
        max_n: data.max_n,
        variable_size: data.variable_size,
    };
    let max_steps = t.max_steps.unwrap_or(usize::MAX);
    let mut last_good = snapshot(&store, &ema, &rng, 0, 0);
    let mut losses = Vec::new();
    let mut step = 0;
    let mut epoch = 0;
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    while epoch < t.epochs && step < max_steps {
        order.shuffle(&mut rng);
        for chunk in order.chunks(t.batch_size) {
            if step >= max_steps {
                break;
            }
            let graphs: Vec<_> = chunk.iter().map(|&i| data.train[i].clone()).collect();
            let clean = DiffusionState::from_batch(&batch(&graphs, data.max_n)?, DType::F32, &Device::Cpu)?;
            let draw = TrainingDraw::sample(&clean, &mut rng, &cfg.edm)?;
            let loss = match training_loss(&net, &clean, &draw, &cfg.edm) {
                Ok(l) => l,
                Err(swingnn_model::Error::TrainingDiverged(message)) => {
                    return Err(diverged(cfg, epoch, step, message, last_good));
                }
                Err(e) => return Err(e.into()),
            };
            let value = loss.to_dtype(DType::F64)?.to_scalar::<f64>()?;
            opt.backward_step(&loss)?;
            ema_update(&mut ema, &store.snapshot(), t.ema_decay)?;
            step += 1;
            losses.push(value);
            if t.log_every > 0 && step % t.log_every == 0 {
                let recent = &losses[losses.len().saturating_sub(t.log_every)..];
                log::info!("epoch {epoch} step {step} loss {:.5}", recent.iter().sum::<f64>() / recent.len() as f64);
            }
        }
        epoch += 1;
        last_good = snapshot(&store, &ema, &rng, epoch, step);
        if let Some(dir) = &t.output_dir {
            if t.checkpoint_every > 0 && epoch % t.checkpoint_every == 0 {
                last_good.save(&dir.join(CHECKPOINT_FILE))?;
            }
        }
    }
    if let Some(dir) = &t.output_dir {
        last_good.save(&dir.join(CHECKPOINT_FILE))?;
        write_losses(&dir.join(LOSS_FILE), &losses)?;
    }
    Ok(TrainOutcome {
        checkpoint: last_good,
        losses,
    })
}

fn diverged(cfg: &Config, epoch: usize, step: usize, message: String, last_good: Checkpoint) -> Error {
    if let Some(dir) = &cfg.train.output_dir {
        if let Err(e) = last_good.save(&dir.join(CHECKPOINT_FILE)) {
            log::error!("could not save the last good checkpoint: {e}");
        }
    }
    Error::Diverged {
        epoch,
        step,
        message,
        last_good: Box::new(last_good),
    }
}

fn write_losses(path: &std::path::Path, losses: &[f64]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        text.push_str(&format!("{},{l}\n", i + 1));
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
