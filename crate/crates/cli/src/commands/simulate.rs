//! `simulate`: integrate a named case from t = 0 and write a snapshot
//! series with element flags and, when a localizer is loaded, per-element
//! edge maps.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use shocknet_core::cases::by_name;
use shocknet_core::dgsem::Operators;
use shocknet_core::error::CoreError;
use shocknet_core::field::ElemKind;
use shocknet_core::indicators::{ElementFlagger, IndicatorVariable, JumpIndicator, ModalIndicator};
use shocknet_core::sim::{run_case, ShockLocalizer, SimConfig};
use shocknet_core::snapshot::{write_edge_maps, write_snapshot, write_vtk};

use super::{
    ensure_dir, flux_name, load_annsi, load_annsl, parse_flux, standard_thresholds, IndicatorChoice,
};
use crate::config::ConfigMap;
use crate::error::{CliError, RuntimeContext};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Case name: rp4 | rp6 | rp12 | dmr | ffs | shock | vortex
    #[arg(long, value_name = "NAME")]
    pub case: Option<String>,
    /// Polynomial degree N of the DG elements
    #[arg(long, value_name = "N")]
    pub degree: Option<usize>,
    /// Mesh override: elements in x (for ffs: the refinement factor)
    #[arg(long, value_name = "NX")]
    pub nx: Option<usize>,
    /// Mesh override: elements in y (ignored by ffs)
    #[arg(long, value_name = "NY")]
    pub ny: Option<usize>,
    /// End time; defaults to the case's own end time
    #[arg(long = "t-end", value_name = "T")]
    pub t_end: Option<f64>,
    /// CFL number of the explicit time step
    #[arg(long, value_name = "C")]
    pub cfl: Option<f64>,
    /// Numerical flux override: roe | hlle
    #[arg(long, value_name = "NAME")]
    pub flux: Option<String>,
    /// Element flagger driving DG/FV switching: none | modal | jump | neural
    #[arg(long, value_name = "NAME")]
    pub indicator: Option<String>,
    /// Flag-on threshold override for modal/jump
    #[arg(long, value_name = "V")]
    pub upper: Option<f64>,
    /// Flag-off threshold override for modal/jump
    #[arg(long, value_name = "V")]
    pub lower: Option<f64>,
    /// Indicator variable for modal/jump: density | pressure
    #[arg(long, value_name = "NAME")]
    pub variable: Option<String>,
    /// Element flagger checkpoint (required with --indicator neural)
    #[arg(long, value_name = "PATH")]
    pub annsi: Option<PathBuf>,
    /// Shock localizer checkpoint; adds per-snapshot edge maps
    #[arg(long, value_name = "PATH")]
    pub annsl: Option<PathBuf>,
    /// Simulation-time interval between snapshots (default: initial and final only)
    #[arg(long = "snapshot-every", value_name = "DT")]
    pub snapshot_every: Option<f64>,
    /// Abort after this many time steps
    #[arg(long = "max-steps", value_name = "K")]
    pub max_steps: Option<u64>,
    /// Additionally write each snapshot as a VTK file
    #[arg(long)]
    pub vtk: bool,
    /// Run tag recorded in run.txt; the solver itself is deterministic
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Output directory for snapshots and the run summary
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn parse_variable(s: &str) -> Result<IndicatorVariable, CliError> {
    match s {
        "density" => Ok(IndicatorVariable::Density),
        "pressure" => Ok(IndicatorVariable::Pressure),
        other => Err(CliError::usage(format!(
            "unknown indicator variable '{other}' (expected density or pressure)"
        ))),
    }
}

/// Everything `simulate` resolved from flags and config, validated.
struct RunSetup {
    case_name: String,
    degree: usize,
    resolution: Option<(usize, usize)>,
    t_end: Option<f64>,
    cfl: f64,
    flux: Option<String>,
    choice: IndicatorChoice,
    thresholds: Option<(f64, f64)>,
    variable: IndicatorVariable,
    annsi: Option<PathBuf>,
    annsl: Option<PathBuf>,
    snapshot_every: Option<f64>,
    max_steps: u64,
    vtk: bool,
    seed: u64,
    out: PathBuf,
}

fn resolve(args: SimulateArgs, cfg: &ConfigMap) -> Result<RunSetup, CliError> {
    let case_name: String = cfg.require(args.case, "case")?;
    let degree: usize = cfg.require(args.degree, "degree")?;
    let out: PathBuf = cfg.require(args.out, "out")?;
    let nx = cfg.resolve(args.nx, "nx")?;
    let ny = cfg.resolve(args.ny, "ny")?;
    let resolution = match (nx, ny) {
        (Some(nx), Some(ny)) => Some((nx, ny)),
        (None, None) => None,
        _ => return Err(CliError::usage("--nx and --ny must be given together")),
    };
    if let Some((nx, ny)) = resolution {
        if nx == 0 || ny == 0 {
            return Err(CliError::usage("--nx and --ny must be at least 1"));
        }
    }
    if degree < 1 {
        return Err(CliError::usage("--degree must be at least 1"));
    }

    let t_end = cfg.resolve(args.t_end, "t-end")?;
    if let Some(t) = t_end {
        if !t.is_finite() || t < 0.0 {
            return Err(CliError::usage(format!("--t-end must be a non-negative time, got {t}")));
        }
    }
    let cfl: f64 = cfg.resolve_or(args.cfl, "cfl", 0.9)?;
    if !cfl.is_finite() || cfl <= 0.0 {
        return Err(CliError::usage(format!("--cfl must be positive, got {cfl}")));
    }

    let choice = IndicatorChoice::parse(&cfg.resolve_or(args.indicator, "indicator", "none".to_string())?)?;
    let upper = cfg.resolve(args.upper, "upper")?;
    let lower = cfg.resolve(args.lower, "lower")?;
    let thresholds = match (choice, standard_thresholds(choice)) {
        (_, Some((su, sl))) => {
            let u = upper.unwrap_or(su);
            let l = lower.unwrap_or(sl);
            if l > u {
                return Err(CliError::usage(format!(
                    "--lower ({l}) must not exceed --upper ({u})"
                )));
            }
            Some((u, l))
        }
        (_, None) => {
            if upper.is_some() || lower.is_some() {
                return Err(CliError::usage(
                    "--upper/--lower only apply to the modal and jump indicators",
                ));
            }
            None
        }
    };
    let variable = parse_variable(&cfg.resolve_or(args.variable, "variable", "density".to_string())?)?;

    let annsi = cfg.resolve(args.annsi, "annsi")?;
    let annsl = cfg.resolve(args.annsl, "annsl")?;
    match choice {
        IndicatorChoice::Neural if annsi.is_none() => {
            return Err(CliError::usage("--indicator neural needs an --annsi checkpoint"));
        }
        IndicatorChoice::Neural => {}
        _ if annsi.is_some() => {
            return Err(CliError::usage("--annsi is only meaningful with --indicator neural"));
        }
        _ => {}
    }

    let snapshot_every = cfg.resolve(args.snapshot_every, "snapshot-every")?;
    if let Some(dt) = snapshot_every {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(CliError::usage(format!("--snapshot-every must be positive, got {dt}")));
        }
    }

    Ok(RunSetup {
        case_name,
        degree,
        resolution,
        t_end,
        cfl,
        flux: cfg.resolve(args.flux, "flux")?,
        choice,
        thresholds,
        variable,
        annsi,
        annsl,
        snapshot_every,
        max_steps: cfg.resolve_or(args.max_steps, "max-steps", u64::MAX)?,
        vtk: args.vtk || cfg.parse("vtk")?.unwrap_or(false),
        seed: cfg.resolve_or(args.seed, "seed", 0)?,
        out,
    })
}

pub fn run(args: SimulateArgs, cfg: &ConfigMap) -> Result<(), CliError> {
    let setup = resolve(args, cfg)?;

    let mut case = by_name(&setup.case_name, setup.resolution)
        .map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(flux) = &setup.flux {
        case.flux = parse_flux(flux)?;
    }
    let t_end = setup.t_end.unwrap_or(case.t_end);

    let flagger: Option<Box<dyn ElementFlagger>> = match setup.choice {
        IndicatorChoice::None => None,
        IndicatorChoice::Modal => {
            let (upper, lower) = setup.thresholds.unwrap();
            Some(Box::new(ModalIndicator { variable: setup.variable, upper, lower }))
        }
        IndicatorChoice::Jump => {
            let (upper, lower) = setup.thresholds.unwrap();
            Some(Box::new(JumpIndicator { variable: setup.variable, upper, lower }))
        }
        IndicatorChoice::Neural => {
            Some(Box::new(load_annsi(setup.annsi.as_ref().unwrap(), setup.degree)?))
        }
    };
    let localizer = match &setup.annsl {
        Some(path) => Some(load_annsl(path, setup.degree)?),
        None => None,
    };

    ensure_dir(&setup.out)?;
    let ops = Operators::new(setup.degree);
    let ne = case.mesh.num_elems();

    let sim_cfg = SimConfig {
        degree: setup.degree,
        cfl: setup.cfl,
        t_end,
        snapshot_every: setup.snapshot_every,
        max_steps: setup.max_steps,
    };

    let mut index = 0usize;
    let mut last_emit: Option<(u64, u64)> = None;
    let mut last_snapshot = String::new();
    let result = {
        let mesh = &case.mesh;
        let out = &setup.out;
        let case_label = setup.case_name.as_str();
        let annsl_active = localizer.is_some();
        let vtk = setup.vtk;
        let mut sink = |state: &shocknet_core::field::HybridState,
                        steps: u64,
                        maps: &[(usize, shocknet_core::indicators::EdgeMap)]|
         -> Result<(), CoreError> {
            // a zero-length run reaches its end time at the initial emit;
            // skip the duplicate final call
            let key = (steps, state.time.to_bits());
            if last_emit == Some(key) {
                return Ok(());
            }
            last_emit = Some(key);
            let name = format!("snap_{index:04}.csv");
            write_snapshot(&out.join(&name), case_label, state, mesh, &ops)?;
            if annsl_active {
                write_edge_maps(&out.join(format!("edges_{index:04}.csv")), maps)?;
            }
            if vtk {
                write_vtk(&out.join(format!("snap_{index:04}.vtk")), state, mesh, &ops)?;
            }
            let fv = state.kinds.iter().filter(|&&k| k == ElemKind::Fv).count();
            println!("t={:.6} step {steps}: wrote {name} (fv {fv}/{ne})", state.time);
            last_snapshot = name;
            index += 1;
            Ok(())
        };
        run_case(
            &case,
            &sim_cfg,
            flagger.as_deref(),
            localizer.as_ref().map(|l| l as &dyn ShockLocalizer),
            &mut sink,
        )
    };

    let (state, stats) = match result {
        Ok(ok) => ok,
        Err(CoreError::Positivity { time, element, source }) => {
            return Err(CliError::runtime(format!(
                "positivity failure at t={time}, element {element}: {source}; \
                 last snapshot: {}",
                setup.out.join(&last_snapshot).display()
            )));
        }
        Err(e) => return Err(CliError::runtime(format!("simulation failed: {e}"))),
    };

    let fv_final = state.kinds.iter().filter(|&&k| k == ElemKind::Fv).count();
    let mut summary = String::new();
    let _ = writeln!(summary, "case {}", setup.case_name);
    let _ = writeln!(summary, "degree {}", setup.degree);
    let _ = writeln!(summary, "elements {ne}");
    let _ = writeln!(summary, "flux {}", flux_name(case.flux));
    match setup.thresholds {
        Some((u, l)) => {
            let _ = writeln!(summary, "indicator {} (upper {u}, lower {l})", setup.choice.name());
        }
        None => {
            let _ = writeln!(summary, "indicator {}", setup.choice.name());
        }
    }
    let _ = writeln!(summary, "localizer {}", if localizer.is_some() { "yes" } else { "no" });
    let _ = writeln!(summary, "cfl {}", setup.cfl);
    let _ = writeln!(summary, "t_end {t_end}");
    let _ = writeln!(summary, "seed {}", setup.seed);
    let _ = writeln!(summary, "steps {}", stats.steps);
    let _ = writeln!(summary, "final_time {}", stats.final_time);
    let _ = writeln!(summary, "snapshots {index}");
    let _ = writeln!(summary, "fv_final {fv_final}");
    std::fs::write(setup.out.join("run.txt"), &summary).runtime("cannot write run.txt")?;

    let mut fv_csv = String::from("time,fv_elements\n");
    for (t, fv) in &stats.fv_history {
        let _ = writeln!(fv_csv, "{t},{fv}");
    }
    std::fs::write(setup.out.join("fv_history.csv"), fv_csv).runtime("cannot write fv_history.csv")?;

    println!(
        "completed {} steps to t={} ({index} snapshots, fv {fv_final}/{ne})",
        stats.steps, stats.final_time
    );
    Ok(())
}
