use serde::Serialize;
use swingnn_core::eval::{graph_mmd, recall_isomorphic, StatKind};
use swingnn_core::Graph;

use crate::config::{Config, DatasetSpec};
use crate::data::build;
use crate::error::{Error, Result};
use crate::sample::generate;
use crate::train::train;

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub degree: f64,
    pub clustering: f64,
    pub orbit: f64,
}

/// MMD of degree, clustering and orbit statistics.
pub fn evaluate(generated: &[Graph], reference: &[Graph]) -> Result<EvalReport> {
    Ok(EvalReport {
        degree: graph_mmd(StatKind::Degree, generated, reference)?,
        clustering: graph_mmd(StatKind::Clustering, generated, reference)?,
        orbit: graph_mmd(StatKind::Orbit, generated, reference)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RecallReport {
    pub permutations: usize,
    pub recall: f64,
    pub steps: usize,
    pub final_loss: f64,
}

/// Trains on the permuted regular-graph toy set and measures the fraction of
/// samples isomorphic to one of the ten base graphs.
pub fn toy_recall(cfg: &Config) -> Result<RecallReport> {
    let DatasetSpec::RegularToy { permutations, .. } = cfg.dataset else {
        return Err(Error::Config("toy recall needs a regular_toy dataset".into()));
    };
    let data = build(&cfg.dataset)?;
    let out = train(cfg, &data)?;
    let samples = generate(&out.checkpoint, cfg.sample.count, cfg.sample.permute, cfg.sample.seed)?;
    Ok(RecallReport {
        permutations,
        recall: recall_isomorphic(&samples, &data.reference)?,
        steps: out.checkpoint.step,
        final_loss: tail_mean(&out.losses),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HeldoutReport {
    pub test_graphs: usize,
    pub mmd: EvalReport,
    pub steps: usize,
    pub final_loss: f64,
}

/// Trains on a graph set and compares as many samples as there are test
/// graphs against the test split.
pub fn heldout_mmd(cfg: &Config) -> Result<HeldoutReport> {
    let data = build(&cfg.dataset)?;
    let out = train(cfg, &data)?;
    let samples = generate(&out.checkpoint, data.reference.len(), cfg.sample.permute, cfg.sample.seed)?;
    Ok(HeldoutReport {
        test_graphs: data.reference.len(),
        mmd: evaluate(&samples, &data.reference)?,
        steps: out.checkpoint.step,
        final_loss: tail_mean(&out.losses),
    })
}

/// Mean of the last tenth of a loss curve.
fn tail_mean(losses: &[f64]) -> f64 {
    let k = (losses.len() / 10).max(1).min(losses.len());
    if k == 0 {
        return f64::NAN;
    }
    losses[losses.len() - k..].iter().sum::<f64>() / k as f64
}
