//! 2D compressible Euler equations: states, fluxes, Riemann solvers.
//!
//! Conservative variables are (rho, rho u, rho v, E) with the ideal-gas
//! closure p = (gamma - 1)(E - rho |v|^2 / 2), gamma = 1.4. Numerical
//! fluxes are evaluated in a face-aligned rotated frame and rotated back,
//! so a single 1D solver serves arbitrary face normals.

use crate::error::CoreError;

pub const GAMMA: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsState {
    pub rho: f64,
    pub mx: f64,
    pub my: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimState {
    pub rho: f64,
    pub vx: f64,
    pub vy: f64,
    pub p: f64,
}

impl ConsState {
    pub fn from_slice(s: &[f64]) -> Self {
        Self { rho: s[0], mx: s[1], my: s[2], e: s[3] }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.mx, self.my, self.e]
    }

    pub fn to_prim(self) -> Result<PrimState, CoreError> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(CoreError::invalid("density", self.rho));
        }
        let vx = self.mx / self.rho;
        let vy = self.my / self.rho;
        let p = pressure(self)?;
        Ok(PrimState { rho: self.rho, vx, vy, p })
    }
}

impl PrimState {
    pub fn to_cons(self) -> ConsState {
        ConsState {
            rho: self.rho,
            mx: self.rho * self.vx,
            my: self.rho * self.vy,
            e: self.p / (GAMMA - 1.0) + 0.5 * self.rho * (self.vx * self.vx + self.vy * self.vy),
        }
    }

    pub fn sound_speed(&self) -> f64 {
        (GAMMA * self.p / self.rho).sqrt()
    }
}

pub fn pressure(w: ConsState) -> Result<f64, CoreError> {
    let p = (GAMMA - 1.0) * (w.e - 0.5 * (w.mx * w.mx + w.my * w.my) / w.rho);
    if !(p > 0.0) || !p.is_finite() {
        return Err(CoreError::invalid("pressure", p));
    }
    Ok(p)
}

/// Physical flux in direction n (unit vector): F(w) . n.
pub fn physical_flux(w: ConsState, n: [f64; 2]) -> Result<[f64; 4], CoreError> {
    let prim = w.to_prim()?;
    let vn = prim.vx * n[0] + prim.vy * n[1];
    Ok([
        w.rho * vn,
        w.mx * vn + prim.p * n[0],
        w.my * vn + prim.p * n[1],
        (w.e + prim.p) * vn,
    ])
}

/// Largest directional signal speed, max(|vx|, |vy|) + c. Used for the
/// explicit time-step bound.
pub fn max_wavespeed(w: ConsState) -> Result<f64, CoreError> {
    let prim = w.to_prim()?;
    Ok(prim.vx.abs().max(prim.vy.abs()) + prim.sound_speed())
}

/// Roe's approximate Riemann solver with an optional Harten-Hyman style
/// entropy fix on the acoustic waves (delta = 0.05 (|u| + c) of the Roe
/// averages).
pub fn roe_flux(wl: ConsState, wr: ConsState, n: [f64; 2], entropy_fix: bool) -> Result<[f64; 4], CoreError> {
    let pl = wl.to_prim()?;
    let pr = wr.to_prim()?;
    let t = [-n[1], n[0]];
    let unl = pl.vx * n[0] + pl.vy * n[1];
    let utl = pl.vx * t[0] + pl.vy * t[1];
    let unr = pr.vx * n[0] + pr.vy * n[1];
    let utr = pr.vx * t[0] + pr.vy * t[1];
    let hl = (wl.e + pl.p) / wl.rho;
    let hr = (wr.e + pr.p) / wr.rho;

    let r = (wr.rho / wl.rho).sqrt();
    let rho_t = r * wl.rho;
    let un_t = (unl + r * unr) / (1.0 + r);
    let ut_t = (utl + r * utr) / (1.0 + r);
    let h_t = (hl + r * hr) / (1.0 + r);
    let q2 = un_t * un_t + ut_t * ut_t;
    let c2 = (GAMMA - 1.0) * (h_t - 0.5 * q2);
    if !(c2 > 0.0) || !c2.is_finite() {
        return Err(CoreError::invalid("Roe average sound speed", c2));
    }
    let c_t = c2.sqrt();

    let drho = wr.rho - wl.rho;
    let dp = pr.p - pl.p;
    let dun = unr - unl;
    let dut = utr - utl;

    let alpha = [
        (dp - rho_t * c_t * dun) / (2.0 * c2),
        drho - dp / c2,
        rho_t * dut,
        (dp + rho_t * c_t * dun) / (2.0 * c2),
    ];
    let lambda = [un_t - c_t, un_t, un_t, un_t + c_t];
    let mut abs_l = [lambda[0].abs(), lambda[1].abs(), lambda[2].abs(), lambda[3].abs()];
    if entropy_fix {
        let delta = 0.05 * (un_t.abs() + c_t);
        for k in [0usize, 3] {
            if abs_l[k] < delta {
                abs_l[k] = (lambda[k] * lambda[k] + delta * delta) / (2.0 * delta);
            }
        }
    }

    // right eigenvectors in the rotated frame (rho, rho un, rho ut, E)
    let k_vec = [
        [1.0, un_t - c_t, ut_t, h_t - un_t * c_t],
        [1.0, un_t, ut_t, 0.5 * q2],
        [0.0, 0.0, 1.0, ut_t],
        [1.0, un_t + c_t, ut_t, h_t + un_t * c_t],
    ];

    let fl = rotated_flux(wl.rho, unl, utl, pl.p, wl.e);
    let fr = rotated_flux(wr.rho, unr, utr, pr.p, wr.e);
    let mut f = [0.0; 4];
    for i in 0..4 {
        f[i] = 0.5 * (fl[i] + fr[i]);
        for k in 0..4 {
            f[i] -= 0.5 * abs_l[k] * alpha[k] * k_vec[k][i];
        }
    }
    Ok(rotate_back(f, n))
}

/// HLLE flux with Einfeldt wave-speed estimates (min/max of physical and
/// Roe-average acoustic speeds).
pub fn hlle_flux(wl: ConsState, wr: ConsState, n: [f64; 2]) -> Result<[f64; 4], CoreError> {
    let pl = wl.to_prim()?;
    let pr = wr.to_prim()?;
    let t = [-n[1], n[0]];
    let unl = pl.vx * n[0] + pl.vy * n[1];
    let utl = pl.vx * t[0] + pl.vy * t[1];
    let unr = pr.vx * n[0] + pr.vy * n[1];
    let utr = pr.vx * t[0] + pr.vy * t[1];
    let cl = pl.sound_speed();
    let cr = pr.sound_speed();
    let hl = (wl.e + pl.p) / wl.rho;
    let hr = (wr.e + pr.p) / wr.rho;

    let r = (wr.rho / wl.rho).sqrt();
    let un_t = (unl + r * unr) / (1.0 + r);
    let ut_t = (utl + r * utr) / (1.0 + r);
    let h_t = (hl + r * hr) / (1.0 + r);
    let c2 = (GAMMA - 1.0) * (h_t - 0.5 * (un_t * un_t + ut_t * ut_t));
    if !(c2 > 0.0) || !c2.is_finite() {
        return Err(CoreError::invalid("Roe average sound speed", c2));
    }
    let c_t = c2.sqrt();

    let sl = (unl - cl).min(un_t - c_t);
    let sr = (unr + cr).max(un_t + c_t);

    let fl = rotated_flux(wl.rho, unl, utl, pl.p, wl.e);
    let fr = rotated_flux(wr.rho, unr, utr, pr.p, wr.e);
    let ul = [wl.rho, wl.rho * unl, wl.rho * utl, wl.e];
    let ur = [wr.rho, wr.rho * unr, wr.rho * utr, wr.e];

    let mut f = [0.0; 4];
    if sl >= 0.0 {
        f = fl;
    } else if sr <= 0.0 {
        f = fr;
    } else {
        for i in 0..4 {
            f[i] = (sr * fl[i] - sl * fr[i] + sl * sr * (ur[i] - ul[i])) / (sr - sl);
        }
    }
    Ok(rotate_back(f, n))
}

#[inline]
fn rotated_flux(rho: f64, un: f64, ut: f64, p: f64, e: f64) -> [f64; 4] {
    [rho * un, rho * un * un + p, rho * un * ut, (e + p) * un]
}

#[inline]
fn rotate_back(f: [f64; 4], n: [f64; 2]) -> [f64; 4] {
    let t = [-n[1], n[0]];
    [
        f[0],
        f[1] * n[0] + f[2] * t[0],
        f[1] * n[1] + f[2] * t[1],
        f[3],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn pressure_of_unit_state() {
        let w = ConsState { rho: 1.0, mx: 0.0, my: 0.0, e: 2.5 };
        approx(pressure(w).unwrap(), 1.0, 1e-15);
    }

    #[test]
    fn pressure_error_on_nonpositive() {
        let w = ConsState { rho: 1.0, mx: 3.0, my: 0.0, e: 1.0 };
        assert!(pressure(w).is_err());
        let w = ConsState { rho: -1.0, mx: 0.0, my: 0.0, e: 1.0 };
        assert!(w.to_prim().is_err());
    }

    #[test]
    fn prim_cons_roundtrip() {
        let p = PrimState { rho: 0.7, vx: -1.3, vy: 2.1, p: 0.45 };
        let q = p.to_cons().to_prim().unwrap();
        approx(q.rho, p.rho, 1e-15);
        approx(q.vx, p.vx, 1e-14);
        approx(q.vy, p.vy, 1e-14);
        approx(q.p, p.p, 1e-14);
    }

    #[test]
    fn flux_of_static_state() {
        // rho=1, v=0, p=1: flux in x is (0, 1, 0, 0)
        let w = PrimState { rho: 1.0, vx: 0.0, vy: 0.0, p: 1.0 }.to_cons();
        let f = physical_flux(w, [1.0, 0.0]).unwrap();
        approx(f[0], 0.0, 1e-15);
        approx(f[1], 1.0, 1e-15);
        approx(f[2], 0.0, 1e-15);
        approx(f[3], 0.0, 1e-15);
    }

    #[test]
    fn flux_rotation_consistency() {
        let w = PrimState { rho: 1.3, vx: 0.4, vy: -0.8, p: 2.0 }.to_cons();
        let inv_s2 = 1.0 / 2f64.sqrt();
        let n = [inv_s2, inv_s2];
        let f = physical_flux(w, n).unwrap();
        let fx = physical_flux(w, [1.0, 0.0]).unwrap();
        let fy = physical_flux(w, [0.0, 1.0]).unwrap();
        for i in 0..4 {
            approx(f[i], (fx[i] + fy[i]) * inv_s2, 1e-14);
        }
    }

    #[test]
    fn roe_consistency() {
        let w = PrimState { rho: 1.1, vx: 0.3, vy: 0.2, p: 0.9 }.to_cons();
        for n in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] {
            let f = roe_flux(w, w, n, true).unwrap();
            let ex = physical_flux(w, n).unwrap();
            for i in 0..4 {
                approx(f[i], ex[i], 1e-13);
            }
        }
    }

    #[test]
    fn hlle_consistency_and_supersonic() {
        let w = PrimState { rho: 1.1, vx: 0.3, vy: 0.2, p: 0.9 }.to_cons();
        let f = hlle_flux(w, w, [0.6, 0.8]).unwrap();
        let ex = physical_flux(w, [0.6, 0.8]).unwrap();
        for i in 0..4 {
            approx(f[i], ex[i], 1e-13);
        }
        // both wave speeds negative: flux is the pure right flux
        let wl = PrimState { rho: 1.0, vx: -3.0, vy: 0.0, p: 1.0 }.to_cons();
        let wr = PrimState { rho: 1.0, vx: -3.1, vy: 0.0, p: 1.0 }.to_cons();
        let f = hlle_flux(wl, wr, [1.0, 0.0]).unwrap();
        let ex = physical_flux(wr, [1.0, 0.0]).unwrap();
        for i in 0..4 {
            approx(f[i], ex[i], 1e-13);
        }
    }

    #[test]
    fn fluxes_antisymmetric_under_swap_and_flip() {
        let wl = PrimState { rho: 1.0, vx: 0.5, vy: -0.1, p: 1.0 }.to_cons();
        let wr = PrimState { rho: 0.6, vx: -0.2, vy: 0.3, p: 0.7 }.to_cons();
        let n = [0.8, 0.6];
        let m = [-0.8, -0.6];
        let f1 = roe_flux(wl, wr, n, true).unwrap();
        let f2 = roe_flux(wr, wl, m, true).unwrap();
        for i in 0..4 {
            approx(f1[i], -f2[i], 1e-13);
        }
        let f1 = hlle_flux(wl, wr, n).unwrap();
        let f2 = hlle_flux(wr, wl, m).unwrap();
        for i in 0..4 {
            approx(f1[i], -f2[i], 1e-13);
        }
    }

    #[test]
    fn wavespeed_componentwise() {
        let w = PrimState { rho: 1.0, vx: 3.0, vy: -4.0, p: 1.0 }.to_cons();
        let c = (GAMMA).sqrt();
        approx(max_wavespeed(w).unwrap(), 4.0 + c, 1e-14);
    }
}
