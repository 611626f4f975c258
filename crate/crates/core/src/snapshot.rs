//! Solution snapshots and related exports.
//!
//! The CSV snapshot is the canonical format: one row per node with the
//! conservative state and the element's DG/FV flag. Floats are written with
//! Rust's shortest-roundtrip formatting, so a read-back is bitwise exact.

use crate::dgsem::Operators;
use crate::error::CoreError;
use crate::field::{ElemKind, HybridState, SolutionField, NVAR};
use crate::indicators::{EdgeMap, RefinePlan, SplitKind};
use crate::mesh::Mesh2D;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Physical position of node (ix, jy) of element `e` in its current
/// representation: mapped Gauss nodes for DG, sub-cell centers for FV.
pub fn node_position(mesh: &Mesh2D, ops: &Operators, kind: ElemKind, e: usize, ix: usize, jy: usize) -> (f64, f64) {
    let el = &mesh.elems[e];
    let coords = match kind {
        ElemKind::Dg => &ops.basis.nodes,
        ElemKind::Fv => &ops.subcell_centers,
    };
    (
        el.x0 + 0.5 * (coords[ix] + 1.0) * el.dx,
        el.y0 + 0.5 * (coords[jy] + 1.0) * el.dy,
    )
}

pub fn write_snapshot(
    path: &Path,
    case: &str,
    state: &HybridState,
    mesh: &Mesh2D,
    ops: &Operators,
) -> Result<(), CoreError> {
    let n = state.field.n;
    let mut out = String::new();
    let _ = writeln!(out, "# case {case}");
    let _ = writeln!(out, "# degree {}", n - 1);
    let _ = writeln!(out, "# time {}", state.time);
    let _ = writeln!(out, "element,ix,jy,x,y,rho,rhou,rhov,energy,fv_flag");
    for e in 0..state.field.num_elems {
        let kind = state.kinds[e];
        let flag = (kind == ElemKind::Fv) as u8;
        for jy in 0..n {
            for ix in 0..n {
                let (x, y) = node_position(mesh, ops, kind, e, ix, jy);
                let w = state.field.state_at(e, jy * n + ix);
                let _ = writeln!(out, "{e},{ix},{jy},{x},{y},{},{},{},{},{flag}", w.rho, w.mx, w.my, w.e);
            }
        }
    }
    std::fs::write(path, out).map_err(|err| wrap_io(err, path))
}

#[derive(Debug)]
pub struct Snapshot {
    pub case: String,
    pub time: f64,
    pub field: SolutionField,
    pub kinds: Vec<ElemKind>,
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, CoreError> {
    let text = std::fs::read_to_string(path).map_err(|err| wrap_io(err, path))?;
    let bad = |detail: &str| CoreError::Format { path: path.display().to_string(), detail: detail.to_string() };
    let mut case = String::new();
    let mut degree = None;
    let mut time = 0.0;
    let mut rows: Vec<(usize, usize, usize, [f64; NVAR], u8)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match it.next() {
                Some("case") => case = it.next().unwrap_or("").to_string(),
                Some("degree") => degree = it.next().and_then(|v| v.parse::<usize>().ok()),
                Some("time") => time = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad time header"))?,
                _ => {}
            }
            continue;
        }
        if line.starts_with("element,") {
            continue;
        }
        let mut f = line.split(',');
        let mut next = || f.next().ok_or_else(|| bad("short row"));
        let e: usize = next()?.parse().map_err(|_| bad("bad element id"))?;
        let ix: usize = next()?.parse().map_err(|_| bad("bad ix"))?;
        let jy: usize = next()?.parse().map_err(|_| bad("bad jy"))?;
        let _x = next()?;
        let _y = next()?;
        let mut w = [0.0; NVAR];
        for v in &mut w {
            *v = next()?.parse().map_err(|_| bad("bad state value"))?;
        }
        let flag: u8 = next()?.parse().map_err(|_| bad("bad flag"))?;
        rows.push((e, ix, jy, w, flag));
    }
    let degree = degree.ok_or_else(|| bad("missing degree header"))?;
    let n = degree + 1;
    let num_elems = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    if rows.len() != num_elems * n * n {
        return Err(bad("row count does not match degree and element count"));
    }
    let mut field = SolutionField::zeros(n, num_elems);
    let mut kinds = vec![ElemKind::Dg; num_elems];
    for (e, ix, jy, w, flag) in rows {
        if ix >= n || jy >= n || e >= num_elems {
            return Err(bad("node index out of range"));
        }
        let node = jy * n + ix;
        let m = n * n;
        for v in 0..NVAR {
            field.elem_mut(e)[v * m + node] = w[v];
        }
        kinds[e] = if flag != 0 { ElemKind::Fv } else { ElemKind::Dg };
    }
    Ok(Snapshot { case, time, field, kinds })
}

/// Per-element binary edge maps, full grid per listed element.
pub fn write_edge_maps(path: &Path, maps: &[(usize, EdgeMap)]) -> Result<(), CoreError> {
    let mut out = String::new();
    let _ = writeln!(out, "element,ix,jy,flag");
    for (e, map) in maps {
        for jy in 0..map.n {
            for ix in 0..map.n {
                let _ = writeln!(out, "{e},{ix},{jy},{}", map.get(ix, jy) as u8);
            }
        }
    }
    std::fs::write(path, out).map_err(|err| wrap_io(err, path))
}

pub fn read_edge_maps(path: &Path, n: usize) -> Result<Vec<(usize, EdgeMap)>, CoreError> {
    let text = std::fs::read_to_string(path).map_err(|err| wrap_io(err, path))?;
    let bad = |detail: &str| CoreError::Format { path: path.display().to_string(), detail: detail.to_string() };
    let mut maps: Vec<(usize, EdgeMap)> = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split(',');
        let mut next = || f.next().ok_or_else(|| bad("short row"));
        let e: usize = next()?.parse().map_err(|_| bad("bad element id"))?;
        let ix: usize = next()?.parse().map_err(|_| bad("bad ix"))?;
        let jy: usize = next()?.parse().map_err(|_| bad("bad jy"))?;
        let flag: u8 = next()?.parse().map_err(|_| bad("bad flag"))?;
        if ix >= n || jy >= n {
            return Err(bad("node index out of range"));
        }
        if maps.last().map(|(id, _)| *id) != Some(e) {
            maps.push((e, EdgeMap::zeros(n)));
        }
        maps.last_mut().unwrap().1.set(ix, jy, flag != 0);
    }
    Ok(maps)
}

/// Aligned text table of the refinement plan.
pub fn write_refine_plan(path: &Path, plan: &RefinePlan) -> Result<(), CoreError> {
    let mut out = String::new();
    let _ = writeln!(out, "{:>8} {:>5} {:>8} {:>14} {:>14}", "element", "level", "split", "I_x", "I_y");
    for entry in &plan.entries {
        let split = match entry.split() {
            SplitKind::None => "none",
            SplitKind::X => "split-x",
            SplitKind::Y => "split-y",
            SplitKind::Xy => "split-xy",
        };
        let _ = writeln!(
            out,
            "{:>8} {:>5} {:>8} {:>14.6} {:>14.6}",
            entry.elem,
            entry.level(),
            split,
            entry.i_x,
            entry.i_y
        );
    }
    std::fs::write(path, out).map_err(|err| wrap_io(err, path))
}

/// Legacy VTK point cloud of the snapshot, for quick external plotting.
pub fn write_vtk(path: &Path, state: &HybridState, mesh: &Mesh2D, ops: &Operators) -> Result<(), CoreError> {
    let n = state.field.n;
    let total = state.field.num_elems * n * n;
    let file = std::fs::File::create(path).map_err(|err| wrap_io(err, path))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |err| wrap_io(err, path);
    writeln!(w, "# vtk DataFile Version 3.0").map_err(io_err)?;
    writeln!(w, "solution snapshot t={}", state.time).map_err(io_err)?;
    writeln!(w, "ASCII").map_err(io_err)?;
    writeln!(w, "DATASET POLYDATA").map_err(io_err)?;
    writeln!(w, "POINTS {total} double").map_err(io_err)?;
    for e in 0..state.field.num_elems {
        for jy in 0..n {
            for ix in 0..n {
                let (x, y) = node_position(mesh, ops, state.kinds[e], e, ix, jy);
                writeln!(w, "{x} {y} 0").map_err(io_err)?;
            }
        }
    }
    writeln!(w, "POINT_DATA {total}").map_err(io_err)?;
    writeln!(w, "SCALARS density double").map_err(io_err)?;
    writeln!(w, "LOOKUP_TABLE default").map_err(io_err)?;
    for e in 0..state.field.num_elems {
        for node in 0..n * n {
            writeln!(w, "{}", state.field.state_at(e, node).rho).map_err(io_err)?;
        }
    }
    writeln!(w, "SCALARS fv_flag int").map_err(io_err)?;
    writeln!(w, "LOOKUP_TABLE default").map_err(io_err)?;
    for e in 0..state.field.num_elems {
        let flag = (state.kinds[e] == ElemKind::Fv) as u8;
        for _ in 0..n * n {
            writeln!(w, "{flag}").map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn wrap_io(err: std::io::Error, path: &Path) -> CoreError {
    CoreError::Format { path: path.display().to_string(), detail: err.to_string() }
}
