//! Time-marching driver for the hybrid scheme.
//!
//! Each step: evaluate the indicator on the current state, switch element
//! representations with hysteresis, then advance one RK step with the
//! element kinds frozen. The indicator also runs on the initial condition
//! so shocks present at t=0 are captured from the first step on.

use crate::cases::CaseSpec;
use crate::dgsem::{Operators, SemiDiscretization};
use crate::error::CoreError;
use crate::field::{switch_elements, ElemKind, HybridState, SolutionField};
use crate::indicators::{decide_kinds, EdgeMap, ElementFlagger};
use crate::timeint::rk_step;

/// Produces per-element edge maps for the listed (FV) elements.
pub trait ShockLocalizer: Send + Sync {
    fn localize(&self, state: &HybridState, ops: &Operators, elems: &[usize]) -> Result<Vec<EdgeMap>, CoreError>;
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub degree: usize,
    pub cfl: f64,
    pub t_end: f64,
    /// simulation-time interval between snapshots (None: initial and final only)
    pub snapshot_every: Option<f64>,
    /// safety valve against runaway dt collapse
    pub max_steps: u64,
}

impl SimConfig {
    pub fn new(degree: usize, t_end: f64) -> Self {
        Self { degree, cfl: 0.9, t_end, snapshot_every: None, max_steps: u64::MAX }
    }
}

pub struct SimStats {
    pub steps: u64,
    pub final_time: f64,
    /// (time, number of FV elements) after each indicator evaluation
    pub fv_history: Vec<(f64, usize)>,
}

/// Evaluate the initial condition at the Gauss nodes of every element.
pub fn init_state(case: &CaseSpec, ops: &Operators) -> HybridState {
    let n = ops.n();
    let mut state = HybridState::new_dg(n, case.mesh.num_elems());
    for (e, el) in case.mesh.elems.iter().enumerate() {
        for jy in 0..n {
            for ix in 0..n {
                let x = el.x0 + 0.5 * (ops.basis.nodes[ix] + 1.0) * el.dx;
                let y = el.y0 + 0.5 * (ops.basis.nodes[jy] + 1.0) * el.dy;
                state.field.set_state(e, jy * n + ix, (case.init)(x, y).to_cons());
            }
        }
    }
    state
}

/// March `case` from t=0 to `cfg.t_end`.
///
/// `flagger`, when present, drives the DG/FV switching; otherwise every
/// element stays DG. `localizer` produces edge maps of FV elements that are
/// handed to `sink` together with each snapshot. `sink` runs at t=0, at the
/// configured cadence, and at the end time.
pub fn run_case(
    case: &CaseSpec,
    cfg: &SimConfig,
    flagger: Option<&dyn ElementFlagger>,
    localizer: Option<&dyn ShockLocalizer>,
    sink: &mut dyn FnMut(&HybridState, u64, &[(usize, EdgeMap)]) -> Result<(), CoreError>,
) -> Result<(HybridState, SimStats), CoreError> {
    let ops = Operators::new(cfg.degree);
    let sd = SemiDiscretization::new(&case.mesh, &ops, &case.bcs, case.flux)?;
    let mut state = init_state(case, &ops);
    let mut stats = SimStats { steps: 0, final_time: 0.0, fv_history: Vec::new() };

    let ne = state.field.num_elems;
    let n = ops.n();
    let len = state.field.data.len();
    let mut g = vec![0.0; len];
    let mut scratch = vec![0.0; len];
    let mut view = SolutionField::zeros(n, ne);
    let mut rhs_out = SolutionField::zeros(n, ne);

    let mut emit = |state: &HybridState, steps: u64, ops: &Operators| -> Result<(), CoreError> {
        let fv_elems: Vec<usize> = (0..ne).filter(|&e| state.kinds[e] == ElemKind::Fv).collect();
        let maps: Vec<(usize, EdgeMap)> = match localizer {
            Some(loc) if !fv_elems.is_empty() => {
                let maps = loc.localize(state, ops, &fv_elems)?;
                fv_elems.iter().copied().zip(maps).collect()
            }
            _ => Vec::new(),
        };
        sink(state, steps, &maps)
    };

    let reflag = |state: &mut HybridState, stats: &mut SimStats, ops: &Operators| -> Result<(), CoreError> {
        if let Some(fl) = flagger {
            let values = fl.evaluate(state, ops)?;
            let (upper, lower) = fl.thresholds();
            let want = decide_kinds(&state.kinds, &values, upper, lower);
            switch_elements(state, &want, &ops.transfer);
            let fv = state.kinds.iter().filter(|&&k| k == ElemKind::Fv).count();
            stats.fv_history.push((state.time, fv));
        }
        Ok(())
    };

    reflag(&mut state, &mut stats, &ops)?;
    emit(&state, 0, &ops)?;
    let mut next_snapshot = cfg.snapshot_every.map(|dt| dt.max(1e-300));

    let t_end = cfg.t_end;
    let tol = 1e-12 * t_end.abs().max(1.0);
    while t_end - state.time > tol && stats.steps < cfg.max_steps {
        let mut dt = sd.compute_dt(&state.field, cfg.cfl)?;
        if !dt.is_finite() || dt <= 0.0 {
            return Err(CoreError::Config(format!("time step collapsed to {dt} at t={}", state.time)));
        }
        if state.time + dt > t_end {
            dt = t_end - state.time;
        }
        let t0 = state.time;
        {
            let kinds = &state.kinds;
            let data = &mut state.field.data;
            rk_step(data, &mut g, &mut scratch, t0, dt, |u, t, out| {
                view.data.copy_from_slice(u);
                sd.rhs(&view, kinds, t, &mut rhs_out)?;
                out.copy_from_slice(&rhs_out.data);
                Ok::<(), CoreError>(())
            })?;
        }
        state.time = t0 + dt;
        stats.steps += 1;
        reflag(&mut state, &mut stats, &ops)?;

        if let Some(next) = next_snapshot {
            if state.time + tol >= next && t_end - state.time > tol {
                emit(&state, stats.steps, &ops)?;
                let every = cfg.snapshot_every.unwrap();
                next_snapshot = Some(next + every * ((state.time - next) / every).floor().max(0.0) + every);
            }
        }
    }
    if t_end - state.time > tol {
        return Err(CoreError::Config(format!(
            "step limit {} reached at t={} before t_end={t_end}",
            cfg.max_steps, state.time
        )));
    }
    emit(&state, stats.steps, &ops)?;
    stats.final_time = state.time;
    Ok((state, stats))
}

/// Discrete L2 error of the density against an exact solution, by Gauss
/// quadrature over all (DG) elements.
pub fn density_l2_error(
    state: &HybridState,
    mesh: &crate::mesh::Mesh2D,
    ops: &Operators,
    exact: impl Fn(f64, f64) -> f64,
) -> f64 {
    let n = ops.n();
    let mut err2 = 0.0;
    let mut volume = 0.0;
    for (e, el) in mesh.elems.iter().enumerate() {
        let jac = el.dx * el.dy / 4.0;
        for jy in 0..n {
            for ix in 0..n {
                let x = el.x0 + 0.5 * (ops.basis.nodes[ix] + 1.0) * el.dx;
                let y = el.y0 + 0.5 * (ops.basis.nodes[jy] + 1.0) * el.dy;
                let d = state.field.state_at(e, jy * n + ix).rho - exact(x, y);
                let w = ops.basis.weights[ix] * ops.basis.weights[jy] * jac;
                err2 += w * d * d;
                volume += w;
            }
        }
    }
    (err2 / volume).sqrt()
}
