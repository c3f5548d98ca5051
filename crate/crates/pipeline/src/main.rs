use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swingnn::config::{Config, DatasetSpec};
use swingnn::experiments::{evaluate, toy_recall};
use swingnn::sample::generate;
use swingnn::train::train;
use swingnn::{data, Checkpoint, Error, Result};
use swingnn_core::edgelist::{load_edge_list, write_graphs};

/// Graph diffusion with shifted-window transformers.
///
/// Every config key can be overridden with SWINGNN__<TABLE>__<KEY>=<value>,
/// e.g. SWINGNN__TRAIN__LR=3e-4. Failures print `error[<category>]: <message>`
/// to stderr and exit with 3 (config), 4 (io), 5 (input), 6 (checkpoint),
/// 7 (diverged), 8 (numeric) or 9 (verification); usage errors exit with 2.
#[derive(Parser)]
#[command(name = "swingnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model; writes checkpoint.safetensors and losses.csv to the output directory.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides train.output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample graphs from a checkpoint's averaged parameters as an edge list.
    Sample {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        count: usize,
        /// Apply a uniform random relabeling to every sample.
        #[arg(long)]
        permute: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Degree, clustering and orbit MMD between two edge-list graph sets.
    Eval {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Write a configured dataset as an edge list.
    Dataset {
        #[arg(long)]
        config: PathBuf,
        /// Held-out split (or the unpermuted base set for the toy data) instead of the training set.
        #[arg(long)]
        reference: bool,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact checks of the invariance counterexamples and the permuted sampler.
    VerifyTheory,
    /// Train on the regular-graph toy set with `l` permutations and report recall.
    ToyRecall {
        #[arg(long)]
        l: usize,
        /// Base config; the desk-scale toy preset if absent.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train { config, out } => {
            let mut cfg = Config::load(&config)?;
            if out.is_some() {
                cfg.train.output_dir = out;
            }
            let data = data::build(&cfg.dataset)?;
            let outcome = train(&cfg, &data)?;
            println!(
                "trained\tepoch={}\tstep={}\tfinal_loss={}",
                outcome.checkpoint.epoch,
                outcome.checkpoint.step,
                outcome.losses.last().copied().unwrap_or(f64::NAN)
            );
            if cfg.train.output_dir.is_none() {
                log::warn!("no output_dir set; the checkpoint was not saved");
            }
            Ok(())
        }
        Command::Sample { ckpt, count, permute, seed, out } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            emit(&write_graphs(&generate(&ckpt, count, permute, seed)?), out)
        }
        Command::Dataset { config, reference, out } => {
            let data = data::build(&Config::load(&config)?.dataset)?;
            emit(&write_graphs(if reference { &data.reference } else { &data.train }), out)
        }
        Command::Eval { generated, reference } => {
            let report = evaluate(&read_graphs(&generated)?, &read_graphs(&reference)?)?;
            println!("{:<12} {:>14}", "metric", "mmd");
            for (name, v) in [("degree", report.degree), ("clustering", report.clustering), ("orbit", report.orbit)] {
                println!("{name:<12} {v:>14.6e}");
            }
            for (name, v) in [("degree", report.degree), ("clustering", report.clustering), ("orbit", report.orbit)] {
                println!("metric\t{name}\t{v:e}");
            }
            Ok(())
        }
        Command::VerifyTheory => {
            let checks = swingnn_core::theory::report()?;
            for c in &checks {
                println!("{c}");
            }
            for c in &checks {
                println!("{}", c.line());
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Error::Verification { failed, total: checks.len() });
            }
            Ok(())
        }
        Command::ToyRecall { l, config } => {
            let mut cfg = match config {
                Some(path) => Config::load(&path)?,
                None => Config::from_toml_with_env(&Config::desk_toy(l).to_toml()?, std::env::vars())?,
            };
            match &mut cfg.dataset {
                DatasetSpec::RegularToy { permutations, .. } => *permutations = l,
                _ => return Err(Error::Config("toy-recall needs a regular_toy dataset".into())),
            }
            cfg.validate()?;
            let report = toy_recall(&cfg)?;
            println!(
                "recall\tl={}\t{}\tsteps={}\tfinal_loss={}",
                report.permutations, report.recall, report.steps, report.final_loss
            );
            Ok(())
        }
    }
}

fn emit(text: &str, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_graphs(path: &Path) -> Result<Vec<swingnn_core::Graph>> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    Ok(load_edge_list(path)?)
}
