//! Shared helpers for the integration tests: an exact solver for the 1D
//! Riemann problem (the oracle for shock-tube runs) and element flaggers
//! that force fixed DG/FV patterns through the public driver API.
#![allow(dead_code)]

use shocknet_core::dgsem::Operators;
use shocknet_core::error::CoreError;
use shocknet_core::field::{ElemKind, HybridState};
use shocknet_core::indicators::ElementFlagger;

pub const GAMMA: f64 = 1.4;

/// Left/right primitive data of a 1D Riemann problem.
#[derive(Debug, Clone, Copy)]
pub struct Rp1d {
    pub rho_l: f64,
    pub u_l: f64,
    pub p_l: f64,
    pub rho_r: f64,
    pub u_r: f64,
    pub p_r: f64,
}

/// Star-region solution; sample with [`ExactRiemann::sample`].
#[derive(Debug, Clone, Copy)]
pub struct ExactRiemann {
    rp: Rp1d,
    pub p_star: f64,
    pub u_star: f64,
}

fn sound(rho: f64, p: f64) -> f64 {
    (GAMMA * p / rho).sqrt()
}

/// f_K(p) and its derivative: velocity change across the left or right wave
/// if the star pressure is `p` (shock branch above p_k, rarefaction below).
fn wave_fn(p: f64, rho_k: f64, p_k: f64) -> (f64, f64) {
    let a_k = sound(rho_k, p_k);
    if p > p_k {
        let big_a = 2.0 / ((GAMMA + 1.0) * rho_k);
        let big_b = (GAMMA - 1.0) / (GAMMA + 1.0) * p_k;
        let root = (big_a / (p + big_b)).sqrt();
        ((p - p_k) * root, root * (1.0 - (p - p_k) / (2.0 * (big_b + p))))
    } else {
        let f = 2.0 * a_k / (GAMMA - 1.0) * ((p / p_k).powf((GAMMA - 1.0) / (2.0 * GAMMA)) - 1.0);
        let df = (p / p_k).powf(-(GAMMA + 1.0) / (2.0 * GAMMA)) / (rho_k * a_k);
        (f, df)
    }
}

impl Rp1d {
    /// Newton iteration on the pressure function; panics if the data would
    /// produce vacuum (not used by any case in the suite).
    pub fn solve(self) -> ExactRiemann {
        let du = self.u_r - self.u_l;
        let a_l = sound(self.rho_l, self.p_l);
        let a_r = sound(self.rho_r, self.p_r);
        assert!(
            2.0 * (a_l + a_r) / (GAMMA - 1.0) > du,
            "pressure positivity condition violated (vacuum forms)"
        );
        // two-rarefaction guess, floored away from zero
        let z = (GAMMA - 1.0) / (2.0 * GAMMA);
        let guess = ((a_l + a_r - 0.5 * (GAMMA - 1.0) * du)
            / (a_l / self.p_l.powf(z) + a_r / self.p_r.powf(z)))
        .powf(1.0 / z);
        let mut p = guess.max(1e-12);
        for _ in 0..100 {
            let (fl, dfl) = wave_fn(p, self.rho_l, self.p_l);
            let (fr, dfr) = wave_fn(p, self.rho_r, self.p_r);
            let step = (fl + fr + du) / (dfl + dfr);
            let next = (p - step).max(1e-14);
            let done = (next - p).abs() / (0.5 * (next + p)) < 1e-14;
            p = next;
            if done {
                break;
            }
        }
        let (fl, _) = wave_fn(p, self.rho_l, self.p_l);
        let (fr, _) = wave_fn(p, self.rho_r, self.p_r);
        ExactRiemann { rp: self, p_star: p, u_star: 0.5 * (self.u_l + self.u_r) + 0.5 * (fr - fl) }
    }
}

impl ExactRiemann {
    /// Solution (rho, u, p) along the ray x/t = `xi`.
    pub fn sample(&self, xi: f64) -> (f64, f64, f64) {
        let g = GAMMA;
        let gm = g - 1.0;
        let gp = g + 1.0;
        let Rp1d { rho_l, u_l, p_l, rho_r, u_r, p_r } = self.rp;
        let (p_star, u_star) = (self.p_star, self.u_star);
        if xi < u_star {
            let a_l = sound(rho_l, p_l);
            if p_star > p_l {
                let s_l = u_l - a_l * (gp / (2.0 * g) * p_star / p_l + gm / (2.0 * g)).sqrt();
                if xi < s_l {
                    (rho_l, u_l, p_l)
                } else {
                    let r = p_star / p_l;
                    (rho_l * (r + gm / gp) / (gm / gp * r + 1.0), u_star, p_star)
                }
            } else {
                let head = u_l - a_l;
                let a_star = a_l * (p_star / p_l).powf(gm / (2.0 * g));
                let tail = u_star - a_star;
                if xi < head {
                    (rho_l, u_l, p_l)
                } else if xi > tail {
                    (rho_l * (p_star / p_l).powf(1.0 / g), u_star, p_star)
                } else {
                    let fac = 2.0 / gp + gm / (gp * a_l) * (u_l - xi);
                    (
                        rho_l * fac.powf(2.0 / gm),
                        2.0 / gp * (a_l + gm / 2.0 * u_l + xi),
                        p_l * fac.powf(2.0 * g / gm),
                    )
                }
            }
        } else {
            let a_r = sound(rho_r, p_r);
            if p_star > p_r {
                let s_r = u_r + a_r * (gp / (2.0 * g) * p_star / p_r + gm / (2.0 * g)).sqrt();
                if xi > s_r {
                    (rho_r, u_r, p_r)
                } else {
                    let r = p_star / p_r;
                    (rho_r * (r + gm / gp) / (gm / gp * r + 1.0), u_star, p_star)
                }
            } else {
                let head = u_r + a_r;
                let a_star = a_r * (p_star / p_r).powf(gm / (2.0 * g));
                let tail = u_star + a_star;
                if xi > head {
                    (rho_r, u_r, p_r)
                } else if xi < tail {
                    (rho_r * (p_star / p_r).powf(1.0 / g), u_star, p_star)
                } else {
                    let fac = 2.0 / gp - gm / (gp * a_r) * (u_r - xi);
                    (
                        rho_r * fac.powf(2.0 / gm),
                        2.0 / gp * (-a_r + gm / 2.0 * u_r + xi),
                        p_r * fac.powf(2.0 * g / gm),
                    )
                }
            }
        }
    }
}

/// Flags every element to FV on the first evaluation and keeps it there.
pub struct AllFv;

impl ElementFlagger for AllFv {
    fn evaluate(&self, state: &HybridState, _ops: &Operators) -> Result<Vec<f64>, CoreError> {
        Ok(vec![1.0; state.field.num_elems])
    }
    fn thresholds(&self) -> (f64, f64) {
        (0.5, -0.5)
    }
    fn name(&self) -> &'static str {
        "all-fv"
    }
}

/// Forces even-index elements to FV and leaves odd-index elements DG.
pub struct CheckerFlag;

impl ElementFlagger for CheckerFlag {
    fn evaluate(&self, state: &HybridState, _ops: &Operators) -> Result<Vec<f64>, CoreError> {
        Ok((0..state.field.num_elems).map(|e| if e % 2 == 0 { 1.0 } else { -1.0 }).collect())
    }
    fn thresholds(&self) -> (f64, f64) {
        (0.5, -0.5)
    }
    fn name(&self) -> &'static str {
        "checkerboard"
    }
}

/// Never flags anything; used to check the driver leaves DG data untouched.
pub struct NeverFlag;

impl ElementFlagger for NeverFlag {
    fn evaluate(&self, state: &HybridState, _ops: &Operators) -> Result<Vec<f64>, CoreError> {
        Ok(vec![-1.0; state.field.num_elems])
    }
    fn thresholds(&self) -> (f64, f64) {
        (0.5, -0.5)
    }
    fn name(&self) -> &'static str {
        "never"
    }
}

pub fn count_kinds(kinds: &[ElemKind]) -> (usize, usize) {
    let fv = kinds.iter().filter(|&&k| k == ElemKind::Fv).count();
    (kinds.len() - fv, fv)
}
