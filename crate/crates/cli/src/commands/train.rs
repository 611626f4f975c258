//! `train`: fit the edge network on generated corpora, checkpointing after
//! every epoch so an interrupted run resumes bit-exactly.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use shocknet_nn::adam::Adam;
use shocknet_nn::checkpoint::{load_checkpoint, save_checkpoint};
use shocknet_nn::datagen::{load_dataset, Dataset};
use shocknet_nn::hed::HedNetwork;
use shocknet_nn::train::{train as train_epochs, EpochStats, TrainConfig};

use super::{ensure_dir, family_name, parse_convention, parse_side_kernel, side_kernel_name};
use crate::config::ConfigMap;
use crate::error::{CliError, RuntimeContext, UsageContext};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus (a gen-data train.ds file)
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    /// Validation corpus (a gen-data val.ds file)
    #[arg(long, value_name = "PATH")]
    pub val: Option<PathBuf>,
    /// Output directory, receives model.ckpt and history.csv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Total number of epochs to train to
    #[arg(long, value_name = "E")]
    pub epochs: Option<usize>,
    /// Mini-batch size
    #[arg(long, value_name = "B")]
    pub batch: Option<usize>,
    /// Initial learning rate
    #[arg(long, value_name = "LR")]
    pub lr0: Option<f64>,
    /// Halve the learning rate every this many epochs
    #[arg(long = "halve-every", value_name = "E")]
    pub halve_every: Option<usize>,
    /// Weight of the fused output in the deep-supervision loss
    #[arg(long, value_name = "L")]
    pub lambda: Option<f64>,
    /// Seed for parameter initialization and epoch shuffling
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Side-output kernel size: k1 | k3
    #[arg(long = "side-kernel", value_name = "K")]
    pub side_kernel: Option<String>,
    /// Loss weighting convention: edge-weighted | class-balanced
    #[arg(long, value_name = "NAME")]
    pub convention: Option<String>,
    /// Continue from an existing checkpoint with optimizer state
    #[arg(long, value_name = "PATH")]
    pub resume: Option<PathBuf>,
}

pub fn run(args: TrainArgs, cfg: &ConfigMap) -> Result<(), CliError> {
    let train_path: PathBuf = cfg.require(args.train, "train")?;
    let val_path: PathBuf = cfg.require(args.val, "val")?;
    let out: PathBuf = cfg.require(args.out, "out")?;
    let defaults = TrainConfig::default();
    let mut tc = TrainConfig {
        epochs: cfg.resolve_or(args.epochs, "epochs", defaults.epochs)?,
        batch: cfg.resolve_or(args.batch, "batch", defaults.batch)?,
        lr0: cfg.resolve_or(args.lr0, "lr0", defaults.lr0)?,
        halve_every: cfg.resolve_or(args.halve_every, "halve-every", defaults.halve_every)?,
        lambda: cfg.resolve_or(args.lambda, "lambda", defaults.lambda)?,
        seed: cfg.resolve_or(args.seed, "seed", defaults.seed)?,
        convention: parse_convention(&cfg.resolve_or(args.convention, "convention", "edge-weighted".to_string())?)?,
        start_epoch: 1,
    };
    let side_kernel_flag = cfg.resolve(args.side_kernel, "side-kernel")?;
    let resume: Option<PathBuf> = cfg.resolve(args.resume, "resume")?;

    let train_set = load_dataset(&train_path).usage("cannot load training corpus")?;
    let val_set = load_dataset(&val_path).usage("cannot load validation corpus")?;
    check_pair(&train_set, &val_set)?;

    let batches_per_epoch = (train_set.len() + tc.batch - 1) / tc.batch.max(1);

    let (mut net, mut adam) = match &resume {
        None => {
            let kernel = parse_side_kernel(side_kernel_flag.as_deref().unwrap_or("k1"))?;
            let net = HedNetwork::<f32>::build(train_set.degree as usize, train_set.node_family, kernel, tc.seed)
                .usage("cannot build the network")?;
            let adam = Adam::new(&net.param_lens());
            (net, adam)
        }
        Some(path) => {
            let ckpt = load_checkpoint(path)
                .map_err(|e| CliError::usage(format!("resume checkpoint {}: {e}", path.display())))?;
            let net = ckpt.net;
            if net.degree != train_set.degree as usize {
                return Err(CliError::usage(format!(
                    "resume checkpoint is for degree {}, but the corpus has degree {}",
                    net.degree, train_set.degree
                )));
            }
            if net.node_family != train_set.node_family {
                return Err(CliError::usage(format!(
                    "resume checkpoint is for {} nodes, but the corpus uses {} nodes",
                    family_name(net.node_family),
                    family_name(train_set.node_family)
                )));
            }
            if let Some(flag) = &side_kernel_flag {
                if parse_side_kernel(flag)? != net.side_kernel {
                    return Err(CliError::usage(format!(
                        "--side-kernel {flag} conflicts with the resume checkpoint ({})",
                        side_kernel_name(net.side_kernel)
                    )));
                }
            }
            let adam = ckpt.adam.ok_or_else(|| {
                CliError::usage("the resume checkpoint has no optimizer state and cannot seed a resumed run")
            })?;
            if adam.step % batches_per_epoch as u64 != 0 {
                return Err(CliError::usage(format!(
                    "resume checkpoint stopped after {} optimizer steps, which is not a whole number of \
                     epochs of {batches_per_epoch} batches; it was trained with a different corpus or batch size",
                    adam.step
                )));
            }
            tc.start_epoch = (adam.step / batches_per_epoch as u64) as usize + 1;
            (net, adam)
        }
    };

    if tc.start_epoch > tc.epochs {
        return Err(CliError::usage(format!(
            "the resume checkpoint already covers epoch {} but --epochs is {}",
            tc.start_epoch - 1,
            tc.epochs
        )));
    }

    ensure_dir(&out)?;
    let ckpt_path = out.join("model.ckpt");
    let history_path = out.join("history.csv");
    let mut history = open_history(&history_path, resume.is_some())?;

    println!(
        "training degree {} / {} nodes / {} kernel: epochs {}..={}, batch {}, lr0 {}, halving every {} epochs",
        net.degree,
        family_name(net.node_family),
        side_kernel_name(net.side_kernel),
        tc.start_epoch,
        tc.epochs,
        tc.batch,
        tc.lr0,
        tc.halve_every
    );

    let mut final_f1 = f64::NAN;
    for epoch in tc.start_epoch..=tc.epochs {
        let epoch_cfg = TrainConfig { start_epoch: epoch, epochs: epoch, ..tc };
        let stats = train_epochs(&mut net, &mut adam, &train_set, &val_set, &epoch_cfg, |_| {})
            .runtime("training failed")?;
        let s: &EpochStats = &stats[0];
        println!(
            "epoch {:>3}: lr {:.6} train loss {:.6} val loss {:.6} val F1 {:.4}",
            s.epoch, s.lr, s.train_loss, s.val_loss, s.val_f1
        );
        let mut line = String::new();
        let _ = writeln!(line, "{},{},{},{},{}", s.epoch, s.lr, s.train_loss, s.val_loss, s.val_f1);
        history.write_all(line.as_bytes()).runtime("cannot append to history.csv")?;
        history.flush().runtime("cannot flush history.csv")?;
        save_checkpoint(&ckpt_path, &net, Some(&adam), adam.step).runtime("cannot write checkpoint")?;
        final_f1 = s.val_f1;
    }

    println!("final validation F1 = {final_f1:.4}");
    println!("wrote {} and {}", ckpt_path.display(), history_path.display());
    Ok(())
}

fn check_pair(train_set: &Dataset, val_set: &Dataset) -> Result<(), CliError> {
    if train_set.degree != val_set.degree {
        return Err(CliError::usage(format!(
            "training corpus has degree {} but validation corpus has degree {}",
            train_set.degree, val_set.degree
        )));
    }
    if train_set.node_family != val_set.node_family {
        return Err(CliError::usage(format!(
            "training corpus uses {} nodes but validation corpus uses {} nodes",
            family_name(train_set.node_family),
            family_name(val_set.node_family)
        )));
    }
    Ok(())
}

fn open_history(path: &Path, resuming: bool) -> Result<std::fs::File, CliError> {
    let existed = path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::runtime(format!("cannot open {}: {e}", path.display())))?;
    if !existed || !resuming {
        if existed {
            // fresh run into an existing directory: start the log over
            file = std::fs::File::create(path)
                .map_err(|e| CliError::runtime(format!("cannot truncate {}: {e}", path.display())))?;
        }
        file.write_all(b"epoch,lr,train_loss,val_loss,val_f1\n")
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(file)
}
