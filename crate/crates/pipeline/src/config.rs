//! Run configuration: one TOML file with `[train]`, `[model]`, `[edm]`,
//! `[dataset]` and `[sample]` tables.
//!
//! Any key can be overridden from the environment as
//! `SWINGNN__<TABLE>__<KEY>=<value>`, e.g. `SWINGNN__TRAIN__LR=3e-4` or
//! `SWINGNN__EDM__STEPS=64`. Values are parsed as TOML and fall back to a
//! plain string.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swingnn_model::{EdmConfig, ModelConfig};

use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "SWINGNN__";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Stop after this many optimizer steps even if epochs remain.
    pub max_steps: Option<usize>,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub ema_decay: f64,
    pub seed: u64,
    /// Save a checkpoint every this many epochs; 0 saves only at the end.
    pub checkpoint_every: usize,
    pub log_every: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            max_steps: None,
            batch_size: 32,
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            ema_decay: 0.999,
            seed: 0,
            checkpoint_every: 0,
            log_every: 100,
            output_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Ten random regular graphs on 16 nodes, each stored under `permutations`
    /// fixed random node orderings.
    RegularToy {
        permutations: usize,
        #[serde(default)]
        seed: u64,
    },
    Grid {
        min_side: usize,
        max_side: usize,
        count: usize,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        #[serde(default)]
        seed: u64,
    },
    CommunitySmall {
        count: usize,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        #[serde(default)]
        seed: u64,
    },
    EdgeList {
        path: PathBuf,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub count: usize,
    pub batch_size: usize,
    pub permute: bool,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            count: 100,
            batch_size: 50,
            permute: false,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub train: TrainConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub edm: EdmConfig,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub sample: SampleConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_env(text, std::iter::empty())
    }

    /// Parses `text` and applies `SWINGNN__…` overrides from `env`.
    pub fn from_toml_with_env(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (key, value) in env {
            if let Some(path) = key.strip_prefix(ENV_PREFIX) {
                let path: Vec<String> = path.split("__").map(str::to_lowercase).collect();
                set_path(&mut table, &path, parse_value(&value))?;
            }
        }
        let cfg: Config = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies overrides from the process environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with_env(&text, std::env::vars())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.train;
        if !(t.lr > 0.0) {
            return Err(Error::Config(format!("lr must be positive, got {}", t.lr)));
        }
        if !(0.0..1.0).contains(&t.ema_decay) {
            return Err(Error::Config(format!("ema_decay must be in [0, 1), got {}", t.ema_decay)));
        }
        if t.batch_size == 0 || self.sample.batch_size == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        if self.model.edge_channels != 1 || self.model.node_channels != 0 {
            return Err(Error::Config("the pipeline trains on plain adjacency: edge_channels = 1, node_channels = 0".into()));
        }
        self.model.validate()?;
        self.edm.validate()?;
        match &self.dataset {
            DatasetSpec::RegularToy { permutations, .. } if *permutations == 0 => {
                Err(Error::Config("permutations must be at least 1".into()))
            }
            DatasetSpec::Grid { min_side, max_side, .. } if min_side > max_side || *min_side == 0 => {
                Err(Error::Config(format!("invalid grid side range {min_side}..={max_side}")))
            }
            _ => Ok(()),
        }
    }

    /// Desk-scale toy setup for the recall experiment with `l` permutations.
    pub fn desk_toy(l: usize) -> Self {
        Self {
            train: TrainConfig {
                epochs: 1_000_000,
                max_steps: Some(12_000),
                batch_size: 10,
                lr: 1e-3,
                ema_decay: 0.99,
                log_every: 1000,
                ..TrainConfig::default()
            },
            model: desk_model(2, 4),
            edm: EdmConfig {
                steps: 64,
                ..EdmConfig::default()
            },
            dataset: DatasetSpec::RegularToy {
                permutations: l,
                seed: 0,
            },
            sample: SampleConfig::default(),
        }
    }

    /// Desk-scale 4–6 × 4–6 grid setup.
    pub fn desk_grid() -> Self {
        Self {
            train: TrainConfig {
                epochs: 1_000_000,
                max_steps: Some(4000),
                batch_size: 16,
                lr: 1e-3,
                ema_decay: 0.99,
                log_every: 500,
                ..TrainConfig::default()
            },
            model: desk_model(3, 6),
            edm: EdmConfig {
                steps: 64,
                ..EdmConfig::default()
            },
            dataset: DatasetSpec::Grid {
                min_side: 4,
                max_side: 6,
                count: 100,
                test_fraction: 0.2,
                seed: 0,
            },
            sample: SampleConfig::default(),
        }
    }
}

/// Width 32, two stages of two blocks each.
pub fn desk_model(patch_size: usize, window_size: usize) -> ModelConfig {
    ModelConfig {
        patch_size,
        window_size,
        token_dim: 32,
        heads: vec![2, 4],
        down_layers: vec![2, 2],
        up_layers: vec![2, 2],
        bottleneck_layers: 1,
        edge_channels: 1,
        node_channels: 0,
        cond_dim: None,
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    match path {
        [] => Err(Error::Config("empty override key".into())),
        [key] => {
            table.insert(key.clone(), value);
            Ok(())
        }
        [head, rest @ ..] => {
            let entry = table
                .entry(head.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => set_path(t, rest, value),
                _ => Err(Error::Config(format!("override path {} crosses a non-table value", path.join(".")))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
patch_size = 2
window_size = 4
token_dim = 32
heads = [2, 4]
down_layers = [2, 2]
up_layers = [2, 2]

[dataset]
kind = "regular_toy"
permutations = 1
"#;

    #[test]
    fn defaults_fill_missing_tables() {
        let cfg = Config::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.edm, EdmConfig::default());
        assert_eq!(cfg.train.lr, 1e-4);
        assert_eq!(cfg.model.bottleneck_layers, 1);
    }

    #[test]
    fn env_overrides_apply() {
        let env = vec![
            ("SWINGNN__TRAIN__LR".to_string(), "3e-4".to_string()),
            ("SWINGNN__EDM__STEPS".to_string(), "64".to_string()),
            ("SWINGNN__DATASET__PERMUTATIONS".to_string(), "500".to_string()),
            ("SWINGNN__TRAIN__OUTPUT_DIR".to_string(), "runs/a".to_string()),
            ("OTHER".to_string(), "x".to_string()),
        ];
        let cfg = Config::from_toml_with_env(MINIMAL, env).unwrap();
        assert_eq!(cfg.train.lr, 3e-4);
        assert_eq!(cfg.edm.steps, 64);
        assert_eq!(cfg.train.output_dir, Some(PathBuf::from("runs/a")));
        assert!(matches!(cfg.dataset, DatasetSpec::RegularToy { permutations: 500, .. }));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = [
            ("SWINGNN__TRAIN__EMA_DECAY", "1.0"),
            ("SWINGNN__TRAIN__LR", "0"),
            ("SWINGNN__EDM__SIGMA_MIN", "100.0"),
            ("SWINGNN__MODEL__HEADS", "[2, 4, 8]"),
            ("SWINGNN__TRAIN__NOT_A_KEY", "1"),
        ];
        for (k, v) in bad {
            let env = vec![(k.to_string(), v.to_string())];
            let err = Config::from_toml_with_env(MINIMAL, env).unwrap_err();
            assert_eq!(err.category(), "config", "{k}={v}: {err}");
        }
    }

    #[test]
    fn round_trips_through_toml() {
        for cfg in [Config::desk_toy(1), Config::desk_grid()] {
            assert_eq!(Config::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        }
    }

    #[test]
    fn shipped_configs_match_presets() {
        assert_eq!(Config::from_toml(include_str!("../../../configs/toy.toml")).unwrap(), Config::desk_toy(1));
        let mut grid = Config::from_toml(include_str!("../../../configs/grid.toml")).unwrap();
        grid.train.output_dir = None;
        assert_eq!(grid, Config::desk_grid());
        let full = Config::from_toml(include_str!("../../../configs/grid-full.toml")).unwrap();
        assert_eq!(full.model, ModelConfig::standard());
    }
}
