//! `gen-data`: synthesize training and validation corpora for the edge
//! networks and write them alongside a human-readable summary table.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use shocknet_nn::datagen::{build_dataset, save_dataset, ClassCounts, Dataset, DatasetSpec, Split};

use super::{ensure_dir, family_name, parse_family, FAMILY_NAMES};
use crate::config::ConfigMap;
use crate::error::{CliError, RuntimeContext};

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Polynomial degree N of the generated images ((N+1)^2 pixels each)
    #[arg(long, value_name = "N")]
    pub degree: Option<usize>,
    /// Node family the images are sampled on: gauss | equispaced
    #[arg(long, value_name = "NAME")]
    pub family: Option<String>,
    /// Scale factor on the standard per-family sample quotas (1.0 = full corpus)
    #[arg(long, value_name = "S")]
    pub scale: Option<f64>,
    /// Base RNG seed; the same seed reproduces the files byte for byte
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Output directory, receives train.ds, val.ds and summary.txt
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: GenDataArgs, cfg: &ConfigMap) -> Result<(), CliError> {
    let degree: usize = cfg.require(args.degree, "degree")?;
    let family = parse_family(&cfg.resolve_or(args.family, "family", "gauss".to_string())?)?;
    let scale: f64 = cfg.resolve_or(args.scale, "scale", 1.0)?;
    let seed: u64 = cfg.resolve_or(args.seed, "seed", 0)?;
    let out: PathBuf = cfg.require(args.out, "out")?;

    if degree < 1 {
        return Err(CliError::usage("--degree must be at least 1"));
    }
    if !scale.is_finite() || scale < 0.0 {
        return Err(CliError::usage(format!("--scale must be a non-negative number, got {scale}")));
    }
    if scale == 0.0 {
        return Err(CliError::usage("--scale 0 would generate an empty corpus; pass a positive scale"));
    }

    ensure_dir(&out)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "synthetic edge corpus");
    let _ = writeln!(summary, "degree {degree}, family {}, scale {scale}, seed {seed}", family_name(family));
    let _ = writeln!(summary);
    let _ = writeln!(summary, "{:<5} {:<15} {:>9} {:>9} {:>9}", "split", "family", "smooth", "edged", "total");

    for (split, file) in [(Split::Train, "train.ds"), (Split::Val, "val.ds")] {
        let split_name = match split {
            Split::Train => "train",
            Split::Val => "val",
        };
        let spec = DatasetSpec { degree, node_family: family, split, scale, seed };
        let mut last_printed: HashMap<u8, u64> = HashMap::new();
        let ds = build_dataset(&spec, |p| {
            let quarter = (p.target / 4).max(1);
            let last = last_printed.entry(p.family).or_insert(0);
            if p.accepted >= p.target || p.accepted >= *last + quarter {
                *last = p.accepted;
                println!(
                    "{split_name} family {}: {}/{} samples ({} draws)",
                    p.family, p.accepted, p.target, p.draws
                );
            }
        })
        .runtime("dataset generation failed")?;
        let path = out.join(file);
        save_dataset(&ds, &path).runtime("cannot write dataset")?;
        println!("wrote {} ({} samples)", path.display(), ds.len());
        append_counts(&mut summary, split_name, &ds);
    }

    let summary_path = out.join("summary.txt");
    std::fs::write(&summary_path, &summary).runtime("cannot write summary")?;
    print!("{summary}");
    println!("wrote {}", summary_path.display());
    Ok(())
}

fn append_counts(summary: &mut String, split_name: &str, ds: &Dataset) {
    let counts: ClassCounts = ds.counts();
    for (idx, &(c0, c1)) in counts.per_family.iter().enumerate() {
        let _ = writeln!(
            summary,
            "{:<5} {:<15} {:>9} {:>9} {:>9}",
            split_name,
            format!("{} ({})", idx + 1, FAMILY_NAMES[idx]),
            c0,
            c1,
            c0 + c1
        );
    }
    let (t0, t1) = counts.class_totals();
    let _ = writeln!(
        summary,
        "{:<5} {:<15} {:>9} {:>9} {:>9}",
        split_name,
        "total",
        t0,
        t1,
        t0 + t1
    );
}
