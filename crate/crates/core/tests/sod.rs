//! Sod shock tube driven entirely on the FV sub-cell representation,
//! checked against the exact solution of the 1D Riemann problem.

mod common;

use common::{count_kinds, AllFv, Rp1d};
use shocknet_core::cases::CaseSpec;
use shocknet_core::dgsem::{Bc, FluxKind, Operators};
use shocknet_core::euler::PrimState;
use shocknet_core::field::ElemKind;
use shocknet_core::mesh::Mesh2D;
use shocknet_core::sim::{run_case, SimConfig};
use shocknet_core::snapshot::node_position;

const SOD: Rp1d = Rp1d { rho_l: 1.0, u_l: 0.0, p_l: 1.0, rho_r: 0.125, u_r: 0.0, p_r: 0.1 };

#[test]
fn exact_solver_matches_published_star_values() {
    // Star-region values for this tube as tabulated in Toro, "Riemann
    // Solvers and Numerical Methods for Fluid Dynamics" (5 decimals).
    let sol = SOD.solve();
    assert!((sol.p_star - 0.30313).abs() < 1e-5, "p* = {}", sol.p_star);
    assert!((sol.u_star - 0.92745).abs() < 1e-5, "u* = {}", sol.u_star);
    let (rho_sl, _, _) = sol.sample(sol.u_star - 1e-9);
    let (rho_sr, _, _) = sol.sample(sol.u_star + 1e-9);
    assert!((rho_sl - 0.42632).abs() < 1e-5, "rho*_L = {rho_sl}");
    assert!((rho_sr - 0.26557).abs() < 1e-5, "rho*_R = {rho_sr}");
}

#[test]
fn exact_solver_handles_symmetric_double_rarefaction() {
    let rp = Rp1d { rho_l: 1.0, u_l: -0.5, p_l: 0.4, rho_r: 1.0, u_r: 0.5, p_r: 0.4 };
    let sol = rp.solve();
    assert!(sol.u_star.abs() < 1e-12);
    assert!(sol.p_star < 0.4);
    // symmetry of the sampled profile
    for xi in [0.1, 0.3, 0.7] {
        let (r1, u1, p1) = sol.sample(xi);
        let (r2, u2, p2) = sol.sample(-xi);
        assert!((r1 - r2).abs() < 1e-12 && (u1 + u2).abs() < 1e-12 && (p1 - p2).abs() < 1e-12);
    }
}

fn sod_case(nx: usize) -> CaseSpec {
    let dx = 1.0 / nx as f64;
    // one element tall, with the element height matching dx so the height
    // does not throttle the time step
    let mesh = Mesh2D::cartesian(0.0, 0.0, 1.0, dx, nx, 1, [0, 0, 1, 1], false, false).unwrap();
    let init = |x: f64, _y: f64| {
        if x < 0.5 {
            PrimState { rho: SOD.rho_l, vx: SOD.u_l, vy: 0.0, p: SOD.p_l }
        } else {
            PrimState { rho: SOD.rho_r, vx: SOD.u_r, vy: 0.0, p: SOD.p_r }
        }
    };
    CaseSpec {
        name: "sod",
        mesh,
        bcs: vec![Bc::Dirichlet(Box::new(move |x, y, _t| init(x, y))), Bc::SlipWall],
        init: Box::new(init),
        t_end: 0.2,
        flux: FluxKind::Roe { entropy_fix: true },
    }
}

#[test]
fn fv_tube_matches_exact_solution_within_two_percent() {
    let case = sod_case(50);
    let cfg = SimConfig::new(3, 0.2); // 50 elements x 4 sub-cells = 200 cells
    let (state, stats) =
        run_case(&case, &cfg, Some(&AllFv), None, &mut |_s, _k, _m| Ok(())).unwrap();
    assert!(stats.steps > 50);
    let (dg, fv) = count_kinds(&state.kinds);
    assert_eq!((dg, fv), (0, 50));

    let ops = Operators::new(3);
    let exact = SOD.solve();
    let n = ops.n();
    let mut err_l1 = 0.0;
    let mut norm_l1 = 0.0;
    let mut rho_min = f64::INFINITY;
    let mut rho_max = f64::NEG_INFINITY;
    for e in 0..case.mesh.num_elems() {
        for ix in 0..n {
            // the profile is uniform in y; read the bottom sub-cell row
            let (x, _y) = node_position(&case.mesh, &ops, ElemKind::Fv, e, ix, 0);
            let rho = state.field.state_at(e, ix).rho;
            let (rho_ex, _, _) = exact.sample((x - 0.5) / 0.2);
            err_l1 += (rho - rho_ex).abs();
            norm_l1 += rho_ex.abs();
            rho_min = rho_min.min(rho);
            rho_max = rho_max.max(rho);
        }
    }
    let rel = err_l1 / norm_l1;
    assert!(rel < 0.02, "relative L1 density error {rel} exceeds 2%");
    // slope-limited reconstruction must not produce notable over/undershoots
    assert!(rho_min > 0.125 - 0.005, "undershoot: min density {rho_min}");
    assert!(rho_max < 1.0 + 0.005, "overshoot: max density {rho_max}");
}

#[test]
fn tube_profile_stays_uniform_in_y_to_roundoff() {
    let case = sod_case(25);
    let cfg = SimConfig::new(3, 0.1);
    let (state, _) = run_case(&case, &cfg, Some(&AllFv), None, &mut |_s, _k, _m| Ok(())).unwrap();
    let n = 4;
    for e in 0..case.mesh.num_elems() {
        for v in 0..4 {
            let vals = state.field.var(e, v);
            for jy in 1..n {
                for ix in 0..n {
                    let (a, b) = (vals[jy * n + ix], vals[ix]);
                    // the wall-flux path differs from the inner-face path by
                    // an ulp-level prim/cons roundtrip, so rows are equal only
                    // up to accumulated roundoff
                    assert!(
                        (a - b).abs() <= 1e-13 * b.abs().max(1.0),
                        "element {e} variable {v}: sub-cell rows differ: {a} vs {b}"
                    );
                }
            }
        }
    }
}
