//! `refine-plan`: build the two-pass anisotropic refinement plan for a
//! stored snapshot from its edge maps, and optionally re-run the case on
//! the conforming refined mesh.

use std::cell::Cell;
use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use shocknet_core::basis::apply_tensor2;
use shocknet_core::cases::{by_name, CaseSpec};
use shocknet_core::dgsem::Operators;
use shocknet_core::error::CoreError;
use shocknet_core::field::{ElemKind, HybridState};
use shocknet_core::indicators::{
    build_refine_plan_with, decide_kinds, EdgeMap, ElementFlagger, SplitKind, MESHREF_LEVEL1,
    MESHREF_LEVEL2,
};
use shocknet_core::mesh::{Axis, Block, FacePlus, Mesh2D, Side};
use shocknet_core::sim::{run_case, ShockLocalizer, SimConfig};
use shocknet_core::snapshot::{read_snapshot, write_edge_maps, write_refine_plan, write_snapshot};
use shocknet_nn::infer::AnnslLocalizer;

use super::{ensure_dir, load_annsi, load_annsl};
use crate::config::ConfigMap;
use crate::error::{CliError, RuntimeContext};

#[derive(Debug, Args)]
pub struct RefinePlanArgs {
    /// Stored snapshot to plan from (a simulate snap_*.csv file)
    #[arg(long, value_name = "PATH")]
    pub snapshot: Option<PathBuf>,
    /// Shock localizer checkpoint producing the edge maps
    #[arg(long, value_name = "PATH")]
    pub annsl: Option<PathBuf>,
    /// Element flagger checkpoint; re-decides which elements are localized
    /// (default: the snapshot's stored FV elements)
    #[arg(long, value_name = "PATH")]
    pub annsi: Option<PathBuf>,
    /// First-pass split threshold
    #[arg(long, value_name = "V")]
    pub level1: Option<f64>,
    /// Second-pass (child) split threshold
    #[arg(long, value_name = "V")]
    pub level2: Option<f64>,
    /// Mesh override the snapshot was produced with: elements in x
    #[arg(long, value_name = "NX")]
    pub nx: Option<usize>,
    /// Mesh override the snapshot was produced with: elements in y
    #[arg(long, value_name = "NY")]
    pub ny: Option<usize>,
    /// Re-run the case on the conforming refined mesh (needs --annsi)
    #[arg(long)]
    pub rerun: bool,
    /// End time of the re-run; defaults to the case's own end time
    #[arg(long = "t-end", value_name = "T")]
    pub t_end: Option<f64>,
    /// CFL number of the re-run
    #[arg(long, value_name = "C")]
    pub cfl: Option<f64>,
    /// Output directory (plan.csv and re-run results)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: RefinePlanArgs, cfg: &ConfigMap) -> Result<(), CliError> {
    let snapshot_path: PathBuf = cfg.require(args.snapshot, "snapshot")?;
    let annsl_path: PathBuf = cfg.require(args.annsl, "annsl")?;
    let annsi_path: Option<PathBuf> = cfg.resolve(args.annsi, "annsi")?;
    let level1: f64 = cfg.resolve_or(args.level1, "level1", MESHREF_LEVEL1)?;
    let level2: f64 = cfg.resolve_or(args.level2, "level2", MESHREF_LEVEL2)?;
    let out: PathBuf = cfg.require(args.out, "out")?;
    let rerun = args.rerun || cfg.parse("rerun")?.unwrap_or(false);
    let nx = cfg.resolve(args.nx, "nx")?;
    let ny = cfg.resolve(args.ny, "ny")?;
    let resolution = match (nx, ny) {
        (Some(nx), Some(ny)) => Some((nx, ny)),
        (None, None) => None,
        _ => return Err(CliError::usage("--nx and --ny must be given together")),
    };
    if !(level1.is_finite() && level2.is_finite() && level1 > 0.0 && level2 > 0.0) {
        return Err(CliError::usage("--level1 and --level2 must be positive"));
    }

    let snap = read_snapshot(&snapshot_path)
        .map_err(|e| CliError::usage(format!("snapshot {}: {e}", snapshot_path.display())))?;
    let degree = snap.field.n - 1;
    let ops = Operators::new(degree);
    let case = by_name(&snap.case, resolution).map_err(|e| CliError::usage(e.to_string()))?;
    let ne = snap.field.num_elems;
    if case.mesh.num_elems() != ne {
        return Err(CliError::usage(format!(
            "snapshot has {ne} elements but case '{}' at this resolution has {}; \
             pass the --nx/--ny the snapshot was produced with",
            snap.case,
            case.mesh.num_elems()
        )));
    }
    let state = HybridState { field: snap.field, kinds: snap.kinds, time: snap.time };

    let localizer = load_annsl(&annsl_path, degree)?;
    let flagger = match &annsi_path {
        Some(path) => Some(load_annsi(path, degree)?),
        None => None,
    };

    // which elements contribute edge maps
    let troubled: Vec<usize> = match &flagger {
        Some(fl) => {
            let values = fl.evaluate(&state, &ops).runtime("element flagging failed")?;
            let (upper, lower) = fl.thresholds();
            decide_kinds(&state.kinds, &values, upper, lower)
                .iter()
                .enumerate()
                .filter(|(_, &k)| k == ElemKind::Fv)
                .map(|(e, _)| e)
                .collect()
        }
        None => (0..ne).filter(|&e| state.kinds[e] == ElemKind::Fv).collect(),
    };

    let n = ops.n();
    let mut maps = vec![EdgeMap::zeros(n); ne];
    if !troubled.is_empty() {
        let troubled_maps = localizer
            .localize(&state, &ops, &troubled)
            .runtime("edge-map evaluation failed")?;
        for (&e, map) in troubled.iter().zip(troubled_maps) {
            maps[e] = map;
        }
    }

    let mut child_failure: Option<CoreError> = None;
    let plan = build_refine_plan_with(
        &maps,
        &case.mesh,
        |e, split| match child_maps(&state, &ops, &localizer, e, split) {
            Ok(maps) => maps,
            Err(err) => {
                child_failure.get_or_insert(err);
                Vec::new()
            }
        },
        level1,
        level2,
    );
    if let Some(err) = child_failure {
        return Err(CliError::runtime(format!("child edge-map evaluation failed: {err}")));
    }

    ensure_dir(&out)?;
    let plan_path = out.join("plan.csv");
    write_refine_plan(&plan_path, &plan).runtime("cannot write plan")?;
    let mut counts = [0usize; 4];
    for entry in &plan.entries {
        counts[match entry.split() {
            SplitKind::None => 0,
            SplitKind::X => 1,
            SplitKind::Y => 2,
            SplitKind::Xy => 3,
        }] += 1;
    }
    let level2_elems = plan.entries.iter().filter(|e| e.level() == 2).count();
    println!(
        "plan: {} of {ne} elements split (x {}, y {}, xy {}; {} at level 2)",
        counts[1] + counts[2] + counts[3],
        counts[1],
        counts[2],
        counts[3],
        level2_elems
    );
    println!("wrote {}", plan_path.display());

    if rerun {
        let Some(flagger) = flagger else {
            return Err(CliError::usage("--rerun needs an --annsi element flagger"));
        };
        rerun_refined(case, &plan, flagger, &localizer, degree, args.t_end, args.cfl, cfg, &out)?;
    }
    Ok(())
}

/// Interpolate the element's density polynomial to the Gauss nodes of each
/// split child and localize the children.
fn child_maps(
    state: &HybridState,
    ops: &Operators,
    localizer: &AnnslLocalizer,
    e: usize,
    split: SplitKind,
) -> Result<Vec<EdgeMap>, CoreError> {
    let n = ops.n();
    let nodal: Vec<f64> = match state.kinds[e] {
        ElemKind::Dg => state.field.var(e, 0).to_vec(),
        ElemKind::Fv => apply_tensor2(&ops.transfer.v_fv_inv, state.field.var(e, 0)),
    };

    let full = (-1.0, 1.0);
    let lo = (-1.0, 0.0);
    let hi = (0.0, 1.0);
    let spans: Vec<((f64, f64), (f64, f64))> = match split {
        SplitKind::None => return Ok(Vec::new()),
        SplitKind::X => vec![(lo, full), (hi, full)],
        SplitKind::Y => vec![(full, lo), (full, hi)],
        SplitKind::Xy => vec![(lo, lo), (hi, lo), (lo, hi), (hi, hi)],
    };

    let mut child = HybridState::new_dg(n, spans.len());
    for (c, (sx, sy)) in spans.iter().enumerate() {
        let lx = interp_rows(ops, *sx);
        let ly = interp_rows(ops, *sy);
        let dest = child.field.var_mut(c, 0);
        for jy in 0..n {
            for ix in 0..n {
                let mut v = 0.0;
                for j in 0..n {
                    let mut row = 0.0;
                    for i in 0..n {
                        row += lx[ix][i] * nodal[j * n + i];
                    }
                    v += ly[jy][j] * row;
                }
                dest[jy * n + ix] = v;
            }
        }
    }
    let elems: Vec<usize> = (0..spans.len()).collect();
    localizer.localize(&child, ops, &elems)
}

/// Lagrange evaluation rows at the element's nodes mapped into `span`.
fn interp_rows(ops: &Operators, span: (f64, f64)) -> Vec<Vec<f64>> {
    (0..ops.n())
        .map(|r| {
            let x = span.0 + 0.5 * (ops.basis.nodes[r] + 1.0) * (span.1 - span.0);
            ops.basis.lagrange_at(x)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn rerun_refined(
    case: CaseSpec,
    plan: &shocknet_core::indicators::RefinePlan,
    flagger: impl ElementFlagger + 'static,
    localizer: &AnnslLocalizer,
    degree: usize,
    t_end_flag: Option<f64>,
    cfl_flag: Option<f64>,
    cfg: &ConfigMap,
    out: &std::path::Path,
) -> Result<(), CliError> {
    if case.mesh.num_bc_tags == 0 {
        return Err(CliError::usage(
            "re-running on a refined mesh is not supported for periodic cases",
        ));
    }
    let t_end = cfg.resolve(t_end_flag, "t-end")?.unwrap_or(case.t_end);
    let cfl: f64 = cfg.resolve_or(cfl_flag, "cfl", 0.9)?;

    let refined = refine_mesh(&case.mesh, plan)?;
    println!("refined mesh: {} elements (from {})", refined.num_elems(), case.mesh.num_elems());
    let refined_case = CaseSpec {
        name: case.name,
        mesh: refined,
        bcs: case.bcs,
        init: case.init,
        t_end: case.t_end,
        flux: case.flux,
    };

    let sim_cfg = SimConfig {
        degree,
        cfl,
        t_end,
        snapshot_every: None,
        max_steps: u64::MAX,
    };
    let ops = Operators::new(degree);
    let snap_path = out.join("refined_final.csv");
    let edges_path = out.join("refined_edges.csv");
    let result = {
        let mesh = &refined_case.mesh;
        let mut sink = |state: &HybridState, _steps: u64, maps: &[(usize, EdgeMap)]| {
            // overwrite on every emit; the final emit leaves the end state
            write_snapshot(&snap_path, refined_case.name, state, mesh, &ops)?;
            write_edge_maps(&edges_path, maps)
        };
        run_case(
            &refined_case,
            &sim_cfg,
            Some(&flagger),
            Some(localizer as &dyn ShockLocalizer),
            &mut sink,
        )
    };
    match result {
        Ok((state, stats)) => {
            let fv = state.kinds.iter().filter(|&&k| k == ElemKind::Fv).count();
            println!(
                "re-run completed {} steps to t={} (fv {fv}/{}); wrote {}",
                stats.steps,
                stats.final_time,
                refined_case.mesh.num_elems(),
                snap_path.display()
            );
            Ok(())
        }
        Err(CoreError::Positivity { time, element, source }) => Err(CliError::runtime(format!(
            "positivity failure on the refined mesh at t={time}, element {element}: {source}; \
             last snapshot: {}",
            snap_path.display()
        ))),
        Err(e) => Err(CliError::runtime(format!("re-run failed: {e}"))),
    }
}

/// Build the conforming refined mesh: per direction, every element in a
/// grid column (row) splits by the finest level requested in that column
/// (row), so shared faces always meet 1:1.
fn refine_mesh(mesh: &Mesh2D, plan: &shocknet_core::indicators::RefinePlan) -> Result<Mesh2D, CliError> {
    let q = |v: f64| (v * 1e9).round() as i64;
    let mut col_level: HashMap<i64, u8> = HashMap::new();
    let mut row_level: HashMap<i64, u8> = HashMap::new();
    for (el, entry) in mesh.elems.iter().zip(&plan.entries) {
        let c = col_level.entry(q(el.x0)).or_insert(0);
        *c = (*c).max(entry.level_x);
        let r = row_level.entry(q(el.y0)).or_insert(0);
        *r = (*r).max(entry.level_y);
    }

    let blocks: Vec<Block> = mesh
        .elems
        .iter()
        .map(|el| {
            let nx = 1usize << col_level[&q(el.x0)];
            let ny = 1usize << row_level[&q(el.y0)];
            Block {
                x0: el.x0,
                y0: el.y0,
                nx,
                ny,
                dx: el.dx / nx as f64,
                dy: el.dy / ny as f64,
            }
        })
        .collect();

    // boundary tags carry over from the original boundary face containing
    // the refined face's midpoint
    let boundary: Vec<(Axis, f64, f64, f64, usize)> = mesh
        .faces
        .iter()
        .filter_map(|f| match f.plus {
            FacePlus::Boundary(tag) => Some((f.axis, f.x, f.y, f.len, tag)),
            _ => None,
        })
        .collect();
    let missing = Cell::new(0usize);
    let tol = 1e-9;
    let refined = Mesh2D::from_blocks(&blocks, |mx, my, side| {
        let want_axis = match side {
            Side::West | Side::East => Axis::X,
            Side::South | Side::North => Axis::Y,
        };
        for &(axis, x, y, len, tag) in &boundary {
            if axis != want_axis {
                continue;
            }
            let hit = match axis {
                Axis::X => (mx - x).abs() < tol && my >= y - tol && my <= y + len + tol,
                Axis::Y => (my - y).abs() < tol && mx >= x - tol && mx <= x + len + tol,
            };
            if hit {
                return tag;
            }
        }
        missing.set(missing.get() + 1);
        0
    })
    .runtime("cannot build the refined mesh")?;
    if missing.get() > 0 {
        return Err(CliError::runtime(format!(
            "{} refined boundary faces did not line up with the original boundary",
            missing.get()
        )));
    }
    Ok(refined)
}
