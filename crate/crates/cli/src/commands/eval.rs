//! `eval`: score a trained checkpoint against a stored corpus.

use std::path::PathBuf;

use clap::Args;
use shocknet_nn::checkpoint::load_checkpoint;
use shocknet_nn::datagen::load_dataset;
use shocknet_nn::train::{evaluate, TrainConfig};

use super::{family_name, parse_convention};
use crate::config::ConfigMap;
use crate::error::{CliError, RuntimeContext, UsageContext};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint to evaluate
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    /// Corpus to evaluate on (a gen-data .ds file)
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Mini-batch size used for the forward passes
    #[arg(long, value_name = "B")]
    pub batch: Option<usize>,
    /// Weight of the fused output in the reported loss
    #[arg(long, value_name = "L")]
    pub lambda: Option<f64>,
    /// Loss weighting convention: edge-weighted | class-balanced
    #[arg(long, value_name = "NAME")]
    pub convention: Option<String>,
}

pub fn run(args: EvalArgs, cfg: &ConfigMap) -> Result<(), CliError> {
    let ckpt_path: PathBuf = cfg.require(args.checkpoint, "checkpoint")?;
    let data_path: PathBuf = cfg.require(args.data, "data")?;
    let defaults = TrainConfig::default();
    let batch: usize = cfg.resolve_or(args.batch, "batch", defaults.batch)?;
    let lambda: f64 = cfg.resolve_or(args.lambda, "lambda", defaults.lambda)?;
    let convention = parse_convention(&cfg.resolve_or(args.convention, "convention", "edge-weighted".to_string())?)?;
    if batch == 0 {
        return Err(CliError::usage("--batch must be at least 1"));
    }

    let ckpt = load_checkpoint(&ckpt_path)
        .map_err(|e| CliError::usage(format!("checkpoint {}: {e}", ckpt_path.display())))?;
    let ds = load_dataset(&data_path).usage("cannot load corpus")?;
    if ckpt.net.degree != ds.degree as usize || ckpt.net.node_family != ds.node_family {
        return Err(CliError::usage(format!(
            "checkpoint is for degree {} on {} nodes, but the corpus is degree {} on {} nodes",
            ckpt.net.degree,
            family_name(ckpt.net.node_family),
            ds.degree,
            family_name(ds.node_family)
        )));
    }

    let stats = evaluate(&ckpt.net, &ds, batch, lambda, convention).runtime("evaluation failed")?;
    println!(
        "samples {} loss {:.6} f1 {:.4} true_pos {} false_pos {} false_neg {}",
        ds.len(),
        stats.loss,
        stats.f1,
        stats.true_pos,
        stats.false_pos,
        stats.false_neg
    );
    Ok(())
}
