//! `describe`: print details of a case, a checkpoint, a corpus file, or —
//! with no selector — the built-in cases and every tunable default.

use std::path::PathBuf;

use clap::Args;
use shocknet_core::basis::NodeFamily;
use shocknet_core::cases::{by_name, CASE_NAMES};
use shocknet_core::indicators::{JumpIndicator, ModalIndicator, MESHREF_LEVEL1, MESHREF_LEVEL2};
use shocknet_nn::checkpoint::load_checkpoint;
use shocknet_nn::datagen::{load_dataset, target_table, Split};
use shocknet_nn::train::{TrainConfig, EDGE_THRESHOLD};

use super::{family_name, flux_name, side_kernel_name, FAMILY_NAMES};
use crate::config::ConfigMap;
use crate::error::{CliError, UsageContext};

#[derive(Debug, Args)]
pub struct DescribeArgs {
    /// Describe a built-in case
    #[arg(long, value_name = "NAME")]
    pub case: Option<String>,
    /// Describe a trained checkpoint
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    /// Describe a generated corpus file
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
}

pub fn run(args: DescribeArgs, cfg: &ConfigMap) -> Result<(), CliError> {
    let case = cfg.resolve(args.case, "case")?;
    let selectors =
        case.is_some() as usize + args.checkpoint.is_some() as usize + args.data.is_some() as usize;
    if selectors > 1 {
        return Err(CliError::usage("pick at most one of --case, --checkpoint, --data"));
    }
    if let Some(name) = case {
        return describe_case(&name);
    }
    if let Some(path) = args.checkpoint {
        return describe_checkpoint(&path);
    }
    if let Some(path) = args.data {
        return describe_data(&path);
    }
    overview();
    Ok(())
}

fn case_blurb(name: &str) -> &'static str {
    match name {
        "rp4" => "four-quadrant Riemann problem, configuration 4",
        "rp6" => "four-quadrant Riemann problem, configuration 6",
        "rp12" => "four-quadrant Riemann problem, configuration 12",
        "dmr" => "Mach 10 double Mach reflection off a ramped wall",
        "ffs" => "Mach 3 flow over a forward-facing step",
        "shock" => "standing normal shock at Mach 2",
        "vortex" => "smooth isentropic vortex (exact solution)",
        _ => "",
    }
}

fn describe_case(name: &str) -> Result<(), CliError> {
    let case = by_name(name, None).usage("unknown case")?;
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for el in &case.mesh.elems {
        x0 = x0.min(el.x0);
        y0 = y0.min(el.y0);
        x1 = x1.max(el.x0 + el.dx);
        y1 = y1.max(el.y0 + el.dy);
    }
    println!("{name}: {}", case_blurb(name));
    println!("domain [{x0}, {x1}] x [{y0}, {y1}]");
    println!("baseline mesh {} elements", case.mesh.num_elems());
    println!("end time {}", case.t_end);
    println!("flux {}", flux_name(case.flux));
    println!("boundary conditions {:?}", case.bcs);
    Ok(())
}

fn describe_checkpoint(path: &PathBuf) -> Result<(), CliError> {
    let ckpt = load_checkpoint(path).usage("cannot load checkpoint")?;
    println!("degree {}", ckpt.net.degree);
    println!("node family {}", family_name(ckpt.net.node_family));
    println!("side kernel {}", side_kernel_name(ckpt.net.side_kernel));
    println!("trainable parameters {}", ckpt.net.param_count());
    println!("optimizer steps {}", ckpt.step);
    println!("optimizer state {}", if ckpt.adam.is_some() { "present" } else { "absent" });
    Ok(())
}

fn describe_data(path: &PathBuf) -> Result<(), CliError> {
    let ds = load_dataset(path).usage("cannot load corpus")?;
    let counts = ds.counts();
    let (c0, c1) = counts.class_totals();
    println!("degree {}", ds.degree);
    println!("node family {}", family_name(ds.node_family));
    println!("samples {} ({} smooth, {} edged)", ds.len(), c0, c1);
    for (idx, &(a, b)) in counts.per_family.iter().enumerate() {
        println!("family {} ({}): {} smooth, {} edged", idx + 1, FAMILY_NAMES[idx], a, b);
    }
    Ok(())
}

fn overview() {
    println!("cases:");
    for name in CASE_NAMES {
        println!("  {name:<7} {}", case_blurb(name));
    }
    let t = TrainConfig::default();
    println!("\ntraining defaults:");
    println!("  epochs {}  batch {}  lr0 {}  halve-every {}  lambda {}", t.epochs, t.batch, t.lr0, t.halve_every, t.lambda);
    let m = ModalIndicator::standard();
    let j = JumpIndicator::standard();
    println!("\nindicator defaults:");
    println!("  modal:  upper {} lower {}", m.upper, m.lower);
    println!("  jump:   upper {} lower {}", j.upper, j.lower);
    println!("  neural: edge probability threshold {EDGE_THRESHOLD}");
    println!("\nrefinement thresholds: level1 {MESHREF_LEVEL1}, level2 {MESHREF_LEVEL2}");
    println!("\nfull corpus sizes (scale 1):");
    for (label, family, degree) in [
        ("gauss, degree <= 7", NodeFamily::Gauss, 5),
        ("gauss, degree >= 8", NodeFamily::Gauss, 8),
        ("equispaced", NodeFamily::Equispaced, 5),
    ] {
        let total = |split| -> u64 {
            target_table(family, degree, split).iter().map(|&(a, b)| a + b).sum()
        };
        println!("  {label:<20} train {:>7}  val {:>6}", total(Split::Train), total(Split::Val));
    }
}
