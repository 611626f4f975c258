//! `indicate`: evaluate indicators offline on a stored snapshot, emitting
//! per-element values, hysteresis decisions, and optional edge maps.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use shocknet_core::dgsem::Operators;
use shocknet_core::field::{ElemKind, HybridState};
use shocknet_core::indicators::{decide_kinds, ElementFlagger, IndicatorVariable, JumpIndicator, ModalIndicator};
use shocknet_core::sim::ShockLocalizer;
use shocknet_core::snapshot::{read_snapshot, write_edge_maps};

use super::{ensure_dir, load_annsi, load_annsl, IndicatorChoice};
use crate::config::ConfigMap;
use crate::error::{CliError, RuntimeContext};

#[derive(Debug, Args)]
pub struct IndicateArgs {
    /// Stored snapshot to analyze (a simulate snap_*.csv file)
    #[arg(long, value_name = "PATH")]
    pub snapshot: Option<PathBuf>,
    /// Comma-separated indicators to evaluate: modal,jump,neural
    #[arg(long, value_name = "LIST")]
    pub indicators: Option<String>,
    /// Element flagger checkpoint (needed when 'neural' is listed)
    #[arg(long, value_name = "PATH")]
    pub annsi: Option<PathBuf>,
    /// Shock localizer checkpoint; writes edge maps of flagged elements
    #[arg(long, value_name = "PATH")]
    pub annsl: Option<PathBuf>,
    /// Indicator variable for modal/jump: density | pressure
    #[arg(long, value_name = "NAME")]
    pub variable: Option<String>,
    /// Modal flag-on threshold override
    #[arg(long = "modal-upper", value_name = "V")]
    pub modal_upper: Option<f64>,
    /// Modal flag-off threshold override
    #[arg(long = "modal-lower", value_name = "V")]
    pub modal_lower: Option<f64>,
    /// Jump flag-on threshold override
    #[arg(long = "jump-upper", value_name = "V")]
    pub jump_upper: Option<f64>,
    /// Jump flag-off threshold override
    #[arg(long = "jump-lower", value_name = "V")]
    pub jump_lower: Option<f64>,
    /// Output directory (indicators.csv, edges.csv); default: print to stdout
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: IndicateArgs, cfg: &ConfigMap) -> Result<(), CliError> {
    let snapshot_path: PathBuf = cfg.require(args.snapshot, "snapshot")?;
    let list = cfg.resolve_or(args.indicators, "indicators", "modal,jump".to_string())?;
    let choices = parse_list(&list)?;
    let annsi = cfg.resolve(args.annsi, "annsi")?;
    let annsl = cfg.resolve(args.annsl, "annsl")?;
    let out: Option<PathBuf> = cfg.resolve(args.out, "out")?;
    let variable = match cfg.resolve_or(args.variable, "variable", "density".to_string())?.as_str() {
        "density" => IndicatorVariable::Density,
        "pressure" => IndicatorVariable::Pressure,
        other => {
            return Err(CliError::usage(format!(
                "unknown indicator variable '{other}' (expected density or pressure)"
            )))
        }
    };

    if choices.contains(&IndicatorChoice::Neural) && annsi.is_none() {
        return Err(CliError::usage("listing 'neural' needs an --annsi checkpoint"));
    }
    if annsl.is_some() && out.is_none() {
        return Err(CliError::usage("writing edge maps (--annsl) needs an --out directory"));
    }

    let snap = read_snapshot(&snapshot_path)
        .map_err(|e| CliError::usage(format!("snapshot {}: {e}", snapshot_path.display())))?;
    let degree = snap.field.n - 1;
    let ops = Operators::new(degree);
    let state = HybridState { field: snap.field, kinds: snap.kinds, time: snap.time };
    let ne = state.field.num_elems;

    let mut flaggers: Vec<(IndicatorChoice, Box<dyn ElementFlagger>)> = Vec::new();
    for &choice in &choices {
        let flagger: Box<dyn ElementFlagger> = match choice {
            IndicatorChoice::Modal => {
                let std = ModalIndicator::standard();
                let upper = cfg.resolve(args.modal_upper, "modal-upper")?.unwrap_or(std.upper);
                let lower = cfg.resolve(args.modal_lower, "modal-lower")?.unwrap_or(std.lower);
                Box::new(ModalIndicator { variable, upper, lower })
            }
            IndicatorChoice::Jump => {
                let std = JumpIndicator::standard();
                let upper = cfg.resolve(args.jump_upper, "jump-upper")?.unwrap_or(std.upper);
                let lower = cfg.resolve(args.jump_lower, "jump-lower")?.unwrap_or(std.lower);
                Box::new(JumpIndicator { variable, upper, lower })
            }
            IndicatorChoice::Neural => Box::new(load_annsi(annsi.as_ref().unwrap(), degree)?),
            IndicatorChoice::None => unreachable!("rejected by parse_list"),
        };
        flaggers.push((choice, flagger));
    }

    // evaluate everything, then decide flags with hysteresis against the
    // element kinds stored in the snapshot
    let mut columns: Vec<(IndicatorChoice, Vec<f64>, Vec<bool>)> = Vec::new();
    for (choice, flagger) in &flaggers {
        let values = flagger.evaluate(&state, &ops).runtime("indicator evaluation failed")?;
        let (upper, lower) = flagger.thresholds();
        let decided = decide_kinds(&state.kinds, &values, upper, lower);
        let flags: Vec<bool> = decided.iter().map(|&k| k == ElemKind::Fv).collect();
        println!("{}: flagged {}/{ne}", choice.name(), flags.iter().filter(|&&f| f).count());
        columns.push((*choice, values, flags));
    }

    let mut csv = String::from("element,stored_fv");
    for (choice, _, _) in &columns {
        let _ = write!(csv, ",{0}_value,{0}_flag", choice.name());
    }
    csv.push('\n');
    for e in 0..ne {
        let _ = write!(csv, "{e},{}", (state.kinds[e] == ElemKind::Fv) as u8);
        for (_, values, flags) in &columns {
            let _ = write!(csv, ",{},{}", values[e], flags[e] as u8);
        }
        csv.push('\n');
    }

    match &out {
        Some(dir) => {
            ensure_dir(dir)?;
            let path = dir.join("indicators.csv");
            std::fs::write(&path, &csv).runtime("cannot write indicators.csv")?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }

    if let Some(annsl_path) = &annsl {
        let localizer = load_annsl(annsl_path, degree)?;
        // localize the union of every listed indicator's flagged elements
        let mut union = vec![false; ne];
        for (_, _, flags) in &columns {
            for (u, &f) in union.iter_mut().zip(flags) {
                *u |= f;
            }
        }
        let elems: Vec<usize> = (0..ne).filter(|&e| union[e]).collect();
        let maps = localizer
            .localize(&state, &ops, &elems)
            .runtime("edge-map evaluation failed")?;
        let pairs: Vec<_> = elems.iter().copied().zip(maps).collect();
        let dir = out.as_ref().unwrap();
        let path = dir.join("edges.csv");
        write_edge_maps(&path, &pairs).runtime("cannot write edges.csv")?;
        println!("wrote {} ({} flagged elements)", path.display(), pairs.len());
    }
    Ok(())
}

fn parse_list(list: &str) -> Result<Vec<IndicatorChoice>, CliError> {
    let mut choices = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let choice = IndicatorChoice::parse(part)?;
        if choice == IndicatorChoice::None {
            return Err(CliError::usage("'none' is not a valid entry in --indicators"));
        }
        if !choices.contains(&choice) {
            choices.push(choice);
        }
    }
    if choices.is_empty() {
        return Err(CliError::usage("--indicators needs at least one of modal, jump, neural"));
    }
    Ok(choices)
}
