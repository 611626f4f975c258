//! Canonical test cases: 2D Riemann problems (configurations 4, 6, 12),
//! double Mach reflection, forward facing step, a standing normal shock,
//! and the smooth isentropic vortex used for convergence studies.

use crate::dgsem::{Bc, FluxKind};
use crate::error::CoreError;
use crate::euler::{PrimState, GAMMA};
use crate::mesh::{Block, Mesh2D, Side};

/// A ready-to-run problem definition.
pub struct CaseSpec {
    pub name: &'static str,
    pub mesh: Mesh2D,
    pub bcs: Vec<Bc>,
    pub init: Box<dyn Fn(f64, f64) -> PrimState + Send + Sync>,
    pub t_end: f64,
    pub flux: FluxKind,
}

impl std::fmt::Debug for CaseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaseSpec")
            .field("name", &self.name)
            .field("elems", &self.mesh.num_elems())
            .field("t_end", &self.t_end)
            .field("flux", &self.flux)
            .finish()
    }
}

/// Construct a case by name. `resolution` overrides the baseline element
/// counts (for the step case both block grids scale by `resolution.0`).
pub fn by_name(name: &str, resolution: Option<(usize, usize)>) -> Result<CaseSpec, CoreError> {
    match name {
        "rp4" => riemann2d(4, resolution),
        "rp6" => riemann2d(6, resolution),
        "rp12" => riemann2d(12, resolution),
        "dmr" => Ok(double_mach(resolution)),
        "ffs" => Ok(forward_step(resolution.map(|(k, _)| k))),
        "shock" => Ok(standing_shock(2.0, 0.5, resolution)),
        "vortex" => Ok(vortex(resolution)),
        other => Err(CoreError::Config(format!("unknown case '{other}'"))),
    }
}

pub const CASE_NAMES: [&str; 7] = ["rp4", "rp6", "rp12", "dmr", "ffs", "shock", "vortex"];

fn quadrant_states(config: u32) -> Option<[[f64; 4]; 4]> {
    // (rho, vx, vy, p), quadrants numbered from the upper right counterclockwise
    match config {
        4 => Some([
            [1.1, 0.0, 0.0, 1.1],
            [0.5065, 0.8939, 0.0, 0.35],
            [1.1, 0.8939, 0.8939, 1.1],
            [0.5065, 0.0, 0.8939, 0.35],
        ]),
        6 => Some([
            [1.0, 0.0, 0.0, 1.0],
            [0.5, -0.8708, 0.0, 0.3636],
            [1.0, -0.8708, 0.7977, 1.0],
            [0.5, 0.0, 0.7977, 0.3636],
        ]),
        12 => Some([
            [0.5313, 0.0, 0.0, 0.4],
            [1.0, 0.7276, 0.0, 1.0],
            [0.8, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.7276, 1.0],
        ]),
        _ => None,
    }
}

fn prim(a: [f64; 4]) -> PrimState {
    PrimState { rho: a[0], vx: a[1], vy: a[2], p: a[3] }
}

/// Four-quadrant Riemann problem on the unit square, interface at (0.5, 0.5),
/// boundary data frozen at the initial quadrant states.
pub fn riemann2d(config: u32, resolution: Option<(usize, usize)>) -> Result<CaseSpec, CoreError> {
    let states = quadrant_states(config)
        .ok_or_else(|| CoreError::Config(format!("Riemann configuration {config} is not defined (use 4, 6 or 12)")))?;
    let (nx, ny) = resolution.unwrap_or((50, 50));
    let mesh = Mesh2D::cartesian(0.0, 0.0, 1.0, 1.0, nx, ny, [0, 0, 0, 0], false, false)?;
    let pick = move |x: f64, y: f64| {
        let q = match (x >= 0.5, y >= 0.5) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        prim(states[q])
    };
    let frozen = pick;
    Ok(CaseSpec {
        name: match config {
            4 => "rp4",
            6 => "rp6",
            _ => "rp12",
        },
        mesh,
        bcs: vec![Bc::Dirichlet(Box::new(move |x, y, _t| frozen(x, y)))],
        init: Box::new(pick),
        t_end: if config == 6 { 0.2 } else { 0.25 },
        flux: FluxKind::Roe { entropy_fix: true },
    })
}

pub const DMR_PRE: PrimState = PrimState { rho: 1.4, vx: 0.0, vy: 0.0, p: 1.0 };

/// Post-shock state of a Mach-10 shock inclined 60 degrees to the x axis,
/// running into still air with sound speed 1.
pub fn dmr_post() -> PrimState {
    let speed = 8.25;
    PrimState {
        rho: 8.0,
        vx: speed * (60f64).to_radians().sin(),
        vy: -speed * (60f64).to_radians().cos(),
        p: 116.5,
    }
}

/// Shock-front x position at height y and time t (foot at 1/6, 60 degrees,
/// traveling at speed 10 along its normal).
pub fn dmr_shock_x(y: f64, t: f64) -> f64 {
    1.0 / 6.0 + (y + 20.0 * t) / 3f64.sqrt()
}

/// Mach-10 shock running up a 30-degree ramp, in the frame where the ramp
/// is the horizontal wall: domain [0,4]x[0,1], inclined shock with its foot
/// at x = 1/6, reflecting wall behind it, exact-shock data on top.
pub fn double_mach(resolution: Option<(usize, usize)>) -> CaseSpec {
    let (nx, ny) = resolution.unwrap_or((49, 12));
    let block = Block { x0: 0.0, y0: 0.0, nx, ny, dx: 4.0 / nx as f64, dy: 1.0 / ny as f64 };
    // tags: 0 inflow, 1 outflow, 2 wall, 3 top exact-shock; the bottom is
    // post-shock inflow left of the shock foot, reflecting wall behind it
    let mesh = Mesh2D::from_blocks(&[block], |mx, _my, side| match side {
        Side::West => 0,
        Side::East => 1,
        Side::North => 3,
        Side::South => {
            if mx < 1.0 / 6.0 {
                0
            } else {
                2
            }
        }
    })
    .expect("single-block mesh");
    let post = dmr_post();
    let top = move |x: f64, _y: f64, t: f64| if x < dmr_shock_x(1.0, t) { post } else { DMR_PRE };
    CaseSpec {
        name: "dmr",
        mesh,
        bcs: vec![
            Bc::Dirichlet(Box::new(move |_x, _y, _t| post)),
            Bc::SupersonicOutflow,
            Bc::SlipWall,
            Bc::Dirichlet(Box::new(top)),
        ],
        init: Box::new(move |x, y| if x < dmr_shock_x(y, 0.0) { post } else { DMR_PRE }),
        t_end: 0.2,
        flux: FluxKind::Roe { entropy_fix: true },
    }
}

pub const FFS_INFLOW: PrimState = PrimState { rho: 1.4, vx: 3.0, vy: 0.0, p: 1.0 };

/// Mach-3 wind tunnel with a step: domain [0,3]x[0,1] minus the step
/// [0.6,3]x[0,0.2], two blocks of 0.06 x 0.04 elements (10x25 and 40x20
/// at the baseline, scaled by `factor`).
pub fn forward_step(factor: Option<usize>) -> CaseSpec {
    let k = factor.unwrap_or(1).max(1);
    let left = Block {
        x0: 0.0,
        y0: 0.0,
        nx: 10 * k,
        ny: 25 * k,
        dx: 0.6 / (10 * k) as f64,
        dy: 1.0 / (25 * k) as f64,
    };
    let right = Block {
        x0: 0.6,
        y0: 0.2,
        nx: 40 * k,
        ny: 20 * k,
        dx: 2.4 / (40 * k) as f64,
        dy: 0.8 / (20 * k) as f64,
    };
    // tags: 0 inflow, 1 outflow, 2 wall; the left block's unmatched east
    // faces (x = 0.6, y < 0.2) are the vertical step wall
    let mesh = Mesh2D::from_blocks(&[left, right], |mx, _my, side| match side {
        Side::West => 0,
        Side::East => {
            if mx > 2.9 {
                1
            } else {
                2
            }
        }
        _ => 2,
    })
    .expect("two-block step mesh");
    CaseSpec {
        name: "ffs",
        mesh,
        bcs: vec![Bc::Dirichlet(Box::new(|_x, _y, _t| FFS_INFLOW)), Bc::SupersonicOutflow, Bc::SlipWall],
        init: Box::new(|_x, _y| FFS_INFLOW),
        t_end: 4.0,
        flux: FluxKind::Hlle,
    }
}

/// Downstream state of a standing normal shock with upstream
/// (rho, u, p) = (1.4, mach, 1), by the Rankine-Hugoniot relations.
pub fn normal_shock_downstream(mach: f64) -> PrimState {
    let m2 = mach * mach;
    let rho_ratio = (GAMMA + 1.0) * m2 / ((GAMMA - 1.0) * m2 + 2.0);
    let p2 = (2.0 * GAMMA * m2 - (GAMMA - 1.0)) / (GAMMA + 1.0);
    PrimState { rho: 1.4 * rho_ratio, vx: mach / rho_ratio, vy: 0.0, p: p2 }
}

/// Steady normal shock at `shock_x` on the unit square, periodic in y,
/// frozen Dirichlet data left and right.
pub fn standing_shock(mach: f64, shock_x: f64, resolution: Option<(usize, usize)>) -> CaseSpec {
    let (nx, ny) = resolution.unwrap_or((5, 5));
    let mesh = Mesh2D::cartesian(0.0, 0.0, 1.0, 1.0, nx, ny, [0, 0, 0, 0], false, true).expect("unit square mesh");
    let up = PrimState { rho: 1.4, vx: mach, vy: 0.0, p: 1.0 };
    let down = normal_shock_downstream(mach);
    let pick = move |x: f64, _y: f64| if x < shock_x { up } else { down };
    CaseSpec {
        name: "shock",
        mesh,
        bcs: vec![Bc::Dirichlet(Box::new(move |x, y, _t| pick(x, y)))],
        init: Box::new(pick),
        t_end: 0.2,
        flux: FluxKind::Roe { entropy_fix: true },
    }
}

/// Exact isentropic-vortex solution: strength-5 vortex centered at (5,5),
/// advected diagonally through the periodic box [0,10]^2.
pub fn vortex_exact(x: f64, y: f64, t: f64) -> PrimState {
    let beta = 5.0;
    let mut dx = (x - 5.0 - t).rem_euclid(10.0);
    let mut dy = (y - 5.0 - t).rem_euclid(10.0);
    if dx > 5.0 {
        dx -= 10.0;
    }
    if dy > 5.0 {
        dy -= 10.0;
    }
    let r2 = dx * dx + dy * dy;
    let gauss = (0.5 * (1.0 - r2)).exp();
    let u = 1.0 - beta / (2.0 * std::f64::consts::PI) * gauss * dy;
    let v = 1.0 + beta / (2.0 * std::f64::consts::PI) * gauss * dx;
    let temp = 1.0
        - (GAMMA - 1.0) * beta * beta / (8.0 * GAMMA * std::f64::consts::PI * std::f64::consts::PI) * gauss * gauss;
    let rho = temp.powf(1.0 / (GAMMA - 1.0));
    PrimState { rho, vx: u, vy: v, p: rho * temp }
}

/// Smooth convergence-study case: the exact vortex on a periodic box.
pub fn vortex(resolution: Option<(usize, usize)>) -> CaseSpec {
    let (nx, ny) = resolution.unwrap_or((10, 10));
    let mesh = Mesh2D::cartesian(0.0, 0.0, 10.0, 10.0, nx, ny, [0, 0, 0, 0], true, true).expect("periodic box mesh");
    CaseSpec {
        name: "vortex",
        mesh,
        bcs: vec![],
        init: Box::new(|x, y| vortex_exact(x, y, 0.0)),
        t_end: 1.0,
        flux: FluxKind::Roe { entropy_fix: false },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn riemann_table_states() {
        let c4 = riemann2d(4, None).unwrap();
        let q1 = (c4.init)(0.75, 0.75);
        assert_eq!((q1.rho, q1.vx, q1.vy, q1.p), (1.1, 0.0, 0.0, 1.1));
        let c12 = riemann2d(12, None).unwrap();
        let q2 = (c12.init)(0.25, 0.75);
        assert_eq!((q2.rho, q2.vx, q2.vy, q2.p), (1.0, 0.7276, 0.0, 1.0));
        let q3 = (c12.init)(0.25, 0.25);
        assert_eq!(q3.rho, 0.8);
        assert_eq!(riemann2d(6, None).unwrap().t_end, 0.2);
        assert_eq!(c4.t_end, 0.25);
        assert!(riemann2d(7, None).is_err());
    }

    #[test]
    fn riemann_piecewise_constant() {
        let c6 = riemann2d(6, None).unwrap();
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(0.0..0.499);
            let y: f64 = rng.gen_range(0.501..1.0);
            let s = (c6.init)(x, y);
            assert_eq!((s.rho, s.vx, s.vy, s.p), (0.5, -0.8708, 0.0, 0.3636));
        }
    }

    #[test]
    fn dmr_rankine_hugoniot() {
        // rho2/rho1 = (g+1)M^2 / ((g-1)M^2 + 2) at M = 10
        let ratio = (GAMMA + 1.0) * 100.0 / ((GAMMA - 1.0) * 100.0 + 2.0);
        let post = dmr_post();
        assert!((post.rho - 1.4 * ratio).abs() < 1e-12);
        assert!((post.rho - 8.0).abs() < 1e-12);
        assert!((post.p - 116.5).abs() < 1e-12);
        let speed = (post.vx * post.vx + post.vy * post.vy).sqrt();
        assert!((speed - 8.25).abs() < 1e-12);
        // pre-shock sound speed is 1
        assert!((DMR_PRE.sound_speed() - 1.0).abs() < 1e-14);
        assert_eq!(double_mach(None).t_end, 0.2);
        assert_eq!(double_mach(None).mesh.num_elems(), 49 * 12);
    }

    #[test]
    fn dmr_boundary_tags_split_bottom() {
        let case = double_mach(None);
        // foot of the shock: 1/6 = 0.1667, dx = 4/49 = 0.0816; elements 0,1
        // have centers 0.0408, 0.1224 < 1/6, element 2 center 0.2041 > 1/6
        let mut inflow = 0;
        let mut wall = 0;
        for f in &case.mesh.faces {
            if let crate::mesh::FacePlus::Boundary(tag) = f.plus {
                if f.y == 0.0 && f.axis == crate::mesh::Axis::Y {
                    match tag {
                        0 => inflow += 1,
                        2 => wall += 1,
                        _ => panic!("unexpected bottom tag {tag}"),
                    }
                }
            }
        }
        assert_eq!(inflow, 2);
        assert_eq!(wall, 47);
    }

    #[test]
    fn ffs_geometry() {
        let case = forward_step(None);
        assert_eq!(case.mesh.num_elems(), 10 * 25 + 40 * 20);
        assert_eq!(case.t_end, 4.0);
        assert_eq!(case.flux, FluxKind::Hlle);
        // inflow Mach number is 3
        let mach = FFS_INFLOW.vx / FFS_INFLOW.sound_speed();
        assert!((mach - 3.0).abs() < 1e-14);
        // every inflow face sits on the west wall of the left block
        for f in &case.mesh.faces {
            if let crate::mesh::FacePlus::Boundary(0) = f.plus {
                assert_eq!(f.x, 0.0, "inflow face away from x=0");
            }
        }
    }

    #[test]
    fn standing_shock_states() {
        let down = normal_shock_downstream(2.0);
        assert!((down.rho - 1.4 * 8.0 / 3.0).abs() < 1e-12);
        assert!((down.vx - 0.75).abs() < 1e-12);
        assert!((down.p - 4.5).abs() < 1e-12);
        // mass flux continuous across the shock
        assert!((down.rho * down.vx - 1.4 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn all_cases_positive_everywhere() {
        let mut rng = StdRng::seed_from_u64(7);
        for name in CASE_NAMES {
            let case = by_name(name, None).unwrap();
            for _ in 0..1500 {
                let x = rng.gen_range(0.0..4.0);
                let y = rng.gen_range(0.0..1.0);
                let s = (case.init)(x, y);
                assert!(s.rho > 0.0 && s.p > 0.0, "case {name} invalid at ({x}, {y})");
            }
        }
    }

    #[test]
    fn vortex_exact_is_periodic_and_advects() {
        let a = vortex_exact(2.3, 7.1, 0.0);
        let b = vortex_exact(2.3 + 10.0, 7.1 - 10.0, 0.0);
        assert!((a.rho - b.rho).abs() < 1e-14);
        // after a full period the solution returns
        let c = vortex_exact(2.3, 7.1, 10.0);
        assert!((a.rho - c.rho).abs() < 1e-13);
        assert!((a.vx - c.vx).abs() < 1e-13);
        // far field is the free stream
        let far = vortex_exact(0.0, 0.0, 0.0);
        assert!((far.rho - 1.0).abs() < 1e-5);
        assert!((far.vx - 1.0).abs() < 1e-5);
    }
}
