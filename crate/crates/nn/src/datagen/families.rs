//! The seven analytic function families behind the training corpus, with
//! their parameter distributions and mesh-size choices.
//!
//! Every random quantity is drawn in a fixed, documented order from the
//! caller's generator, so a draw index plus a seed pins a sample down
//! bitwise. Families 1-3 are smooth everywhere (class 0 by construction);
//! families 4-7 carry genuine discontinuities or derivative kinks whose
//! class depends on drawn magnitudes.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::NnError;

/// Number of function families.
pub const NUM_FAMILIES: usize = 7;

/// Parameters of one drawn function instance.
#[derive(Debug, Clone)]
pub enum FamilyParams {
    /// u = a x + b y.
    Linear { a: f64, b: f64 },
    /// u = sum_k a_k sin(k pi x) + b_k cos(k pi y) + c.
    Fourier { a: Vec<f64>, b: Vec<f64>, c: f64 },
    /// u = exp(a1 r1^2) + exp(a4 r2^2) with centers (a2, a3), (a5, a6).
    Bumps { a: [f64; 6] },
    /// Four constant values in the sectors cut by y - y0 = m (x - x0)^d
    /// and y - y0 = -(1/m) (x - x0)^d.
    Sectors { u: [f64; 4], m: f64, x0: f64, y0: f64, d: u32 },
    /// u = a |(y - y0) - m (x - x0)| + c: a ridge kink along a line.
    Ridge { a: f64, m: f64, x0: f64, y0: f64, c: f64 },
    /// Rectified ramps: either two independent one-directional ramps
    /// (separate = true) or one ramp in a rotated direction.
    Ramps {
        separate: bool,
        a2: f64,
        a3: f64,
        b1: f64,
        b2: f64,
        x0: f64,
        y0: f64,
        c: f64,
    },
    /// Decaying oscillation at the resolvability-limit frequency, with an
    /// amplitude kink pattern reminiscent of ringing artifacts.
    Oscillation { a1: f64, a2: f64, a3: f64, x0: f64, y0: f64, c: f64, fny: f64 },
}

/// A drawn function together with the mesh it is to be sampled on.
#[derive(Debug, Clone)]
pub struct FamilyDraw {
    /// Family id, 1..=7.
    pub family: u8,
    pub params: FamilyParams,
    /// Elements per direction of the Cartesian mesh covering [-1, 1]^2.
    pub n_e: usize,
}

/// Pick from weighted alternatives using a single uniform draw.
fn pick<R: Rng>(rng: &mut R, choices: &[(usize, f64)]) -> usize {
    let t: f64 = rng.gen_range(0.0..1.0);
    let mut acc = 0.0;
    for &(value, p) in choices {
        acc += p;
        if t < acc {
            return value;
        }
    }
    choices.last().expect("non-empty choice list").0
}

fn normal<R: Rng>(rng: &mut R, std: f64) -> f64 {
    Normal::new(0.0, std).expect("valid std").sample(rng)
}

/// Largest oscillation count the degree-N nodal basis can represent per
/// direction, used as the frequency cap of family 2.
pub fn frequency_cap(degree: usize) -> usize {
    (degree / 2).max(1)
}

/// Draw one function instance of the given family (1..=7).
///
/// Draw order per family (all from `rng`, in this sequence):
/// 1: a, b, mesh. 2: frequency count, (a_k, b_k) pairs, c, mesh.
/// 3: a1..a6, mesh (never the single-element mesh, so its steep but smooth
/// gradients are not presented as resolved). 4: u1..u4, m, x0, y0, d
/// (70% straight, 30% curved). 5: a, m, x0, y0, c. 6: branch/sign choices
/// a1..a3, slopes b1, b2, x0, y0, c. 7: a1, a2, a3, x0, y0, c.
pub fn draw_family<R: Rng>(rng: &mut R, family: u8, degree: usize) -> Result<FamilyDraw, NnError> {
    match family {
        1 => {
            let a = normal(rng, 0.2);
            let b = normal(rng, 0.2);
            let n_e = pick(rng, &[(1, 0.5), (10, 0.3), (20, 0.2)]);
            Ok(FamilyDraw { family, params: FamilyParams::Linear { a, b }, n_e })
        }
        2 => {
            let cap = frequency_cap(degree);
            let n_f = rng.gen_range(1..=cap);
            let mut a = Vec::with_capacity(n_f);
            let mut b = Vec::with_capacity(n_f);
            for _ in 0..n_f {
                a.push(rng.gen_range(-0.5..0.5));
                b.push(rng.gen_range(-0.5..0.5));
            }
            let c = rng.gen_range(0.0..1.0);
            let n_e = pick(rng, &[(1, 0.3), (10, 0.4), (20, 0.3)]);
            Ok(FamilyDraw { family, params: FamilyParams::Fourier { a, b, c }, n_e })
        }
        3 => {
            let mut a = [0.0; 6];
            for v in a.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let n_e = pick(rng, &[(10, 0.6), (20, 0.4)]);
            Ok(FamilyDraw { family, params: FamilyParams::Bumps { a }, n_e })
        }
        4 => {
            let mut u = [0.0; 4];
            for v in u.iter_mut() {
                *v = rng.gen_range(0.0..1.0);
            }
            let m = rng.gen_range(0.0..10.0);
            let x0 = rng.gen_range(-1.0..1.0);
            let y0 = rng.gen_range(-1.0..1.0);
            let d = if rng.gen_range(0.0..1.0) < 0.7 { 1 } else { 2 };
            Ok(FamilyDraw { family, params: FamilyParams::Sectors { u, m, x0, y0, d }, n_e: 1 })
        }
        5 => {
            let a = normal(rng, 0.4);
            let m = rng.gen_range(-2.0..2.0);
            let x0 = rng.gen_range(-1.0..1.0);
            let y0 = rng.gen_range(-1.0..1.0);
            let c = rng.gen_range(0.0..1.0);
            Ok(FamilyDraw { family, params: FamilyParams::Ridge { a, m, x0, y0, c }, n_e: 1 })
        }
        6 => {
            let separate = rng.gen_range(0.0..1.0) < 0.5; // sign of the branch switch
            let a2 = if rng.gen_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 };
            let a3 = if rng.gen_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 };
            let b1 = normal(rng, 0.6);
            let b2 = normal(rng, 0.6);
            let x0 = rng.gen_range(-0.6..0.6);
            let y0 = rng.gen_range(-0.6..0.6);
            let c = rng.gen_range(0.0..1.0);
            Ok(FamilyDraw {
                family,
                params: FamilyParams::Ramps { separate, a2, a3, b1, b2, x0, y0, c },
                n_e: 1,
            })
        }
        7 => {
            let a1 = normal(rng, 0.4);
            let a2 = normal(rng, 0.4);
            let a3 = rng.gen_range(-2.0..2.0);
            let x0 = rng.gen_range(-1.0..1.0);
            let y0 = rng.gen_range(-1.0..1.0);
            let c = rng.gen_range(0.0..1.0);
            let fny = degree as f64 / 2.0;
            Ok(FamilyDraw {
                family,
                params: FamilyParams::Oscillation { a1, a2, a3, x0, y0, c, fny },
                n_e: 1,
            })
        }
        _ => Err(NnError::config(format!("function family must be 1..=7, got {family}"))),
    }
}

impl FamilyParams {
    /// Evaluate the function at a point of [-1, 1]^2.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            FamilyParams::Linear { a, b } => a * x + b * y,
            FamilyParams::Fourier { a, b, c } => {
                let mut s = *c;
                for (k, (&ak, &bk)) in a.iter().zip(b.iter()).enumerate() {
                    let f = (k + 1) as f64 * std::f64::consts::PI;
                    s += ak * (f * x).sin() + bk * (f * y).cos();
                }
                s
            }
            FamilyParams::Bumps { a } => {
                let r1 = (x - a[1]).powi(2) + (y - a[2]).powi(2);
                let r2 = (x - a[4]).powi(2) + (y - a[5]).powi(2);
                (a[0] * r1).exp() + (a[3] * r2).exp()
            }
            FamilyParams::Sectors { u, m, x0, y0, d } => {
                let (s1, s2) = sector_sides(*m, *x0, *y0, *d, x, y);
                u[2 * (s1 as usize) + (s2 as usize)]
            }
            FamilyParams::Ridge { a, m, x0, y0, c } => a * ((y - y0) - m * (x - x0)).abs() + c,
            FamilyParams::Ramps { separate, a2, a3, b1, b2, x0, y0, c } => {
                if *separate {
                    a2 * (b1 * (x - x0)).max(0.0) + a3 * (b2 * (y - y0)).max(0.0) + c
                } else {
                    a2 * (b1 * (x - x0) + b2 * (y - y0)).max(0.0) + c
                }
            }
            FamilyParams::Oscillation { a1, a2, a3, x0, y0, c, fny } => {
                let pi = std::f64::consts::PI;
                a1 * (fny * pi * (x - x0)).sin() * (a3 * (x - x0)).exp()
                    + a2 * (fny * pi * (y - y0)).cos() * (a3 * (y - y0)).exp()
                    + c
            }
        }
    }
}

/// Which side of each separating curve a point lies on, in the
/// division-free form m (y - y0) + (x - x0)^d >= 0 for the second curve so
/// that m = 0 degenerates gracefully.
pub fn sector_sides(m: f64, x0: f64, y0: f64, d: u32, x: f64, y: f64) -> (bool, bool) {
    let dx = (x - x0).powi(d as i32);
    let s1 = (y - y0) - m * dx >= 0.0;
    let s2 = m * (y - y0) + dx >= 0.0;
    (s1, s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frequency_cap_follows_the_degree() {
        assert_eq!(frequency_cap(3), 1);
        assert_eq!(frequency_cap(4), 2);
        assert_eq!(frequency_cap(5), 2);
        assert_eq!(frequency_cap(9), 4);
    }

    #[test]
    fn family_two_respects_the_frequency_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let draw = draw_family(&mut rng, 2, 5).unwrap();
            if let FamilyParams::Fourier { a, b, .. } = &draw.params {
                assert!(!a.is_empty() && a.len() <= 2);
                assert_eq!(a.len(), b.len());
            } else {
                panic!("family 2 must draw Fourier parameters");
            }
        }
    }

    #[test]
    fn mesh_probabilities_are_roughly_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 3];
        let n = 20_000;
        for _ in 0..n {
            let draw = draw_family(&mut rng, 1, 5).unwrap();
            match draw.n_e {
                1 => counts[0] += 1,
                10 => counts[1] += 1,
                20 => counts[2] += 1,
                other => panic!("unexpected mesh size {other}"),
            }
        }
        let f = |c: usize| c as f64 / n as f64;
        assert!((f(counts[0]) - 0.5).abs() < 0.02);
        assert!((f(counts[1]) - 0.3).abs() < 0.02);
        assert!((f(counts[2]) - 0.2).abs() < 0.02);
    }

    #[test]
    fn family_three_avoids_the_single_element_mesh() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let draw = draw_family(&mut rng, 3, 5).unwrap();
            assert!(draw.n_e == 10 || draw.n_e == 20);
        }
    }

    #[test]
    fn discontinuous_families_use_one_element() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for family in 4..=7u8 {
            for _ in 0..50 {
                let draw = draw_family(&mut rng, family, 5).unwrap();
                assert_eq!(draw.n_e, 1);
            }
        }
    }

    #[test]
    fn straight_to_curved_sector_ratio_is_seven_to_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut straight = 0usize;
        for _ in 0..n {
            let draw = draw_family(&mut rng, 4, 5).unwrap();
            if let FamilyParams::Sectors { d, .. } = draw.params {
                if d == 1 {
                    straight += 1;
                }
            }
        }
        let frac = straight as f64 / n as f64;
        // Three-sigma band around 0.7 for 1e5 Bernoulli trials.
        assert!((frac - 0.7).abs() < 3.0 * (0.7f64 * 0.3 / n as f64).sqrt() + 1e-3,
            "straight fraction {frac}");
    }

    #[test]
    fn sector_assignment_flips_exactly_across_each_curve() {
        // Straight curves through the origin with slope 1: quadrant-like
        // sectors; check the four section values appear where expected.
        let params = FamilyParams::Sectors {
            u: [0.1, 0.2, 0.3, 0.4],
            m: 1.0,
            x0: 0.0,
            y0: 0.0,
            d: 1,
        };
        // Above both curves (north): s1 = true (y > m x at x=0... pick
        // (0, 0.5)): y - mx = 0.5 >= 0, m y + x = 0.5 >= 0 -> u[3].
        assert_eq!(params.eval(0.0, 0.5), 0.4);
        // South point (0, -0.5): s1 false, s2 false -> u[0].
        assert_eq!(params.eval(0.0, -0.5), 0.1);
        // East point (0.5, 0): s1 = -0.5 < 0 false, s2 = 0.5 >= 0 true -> u[1].
        assert_eq!(params.eval(0.5, 0.0), 0.2);
        // West point (-0.5, 0): s1 true, s2 false -> u[2].
        assert_eq!(params.eval(-0.5, 0.0), 0.3);
    }

    #[test]
    fn degenerate_slope_keeps_sectors_finite() {
        let params = FamilyParams::Sectors {
            u: [0.1, 0.2, 0.3, 0.4],
            m: 0.0,
            x0: 0.2,
            y0: -0.1,
            d: 1,
        };
        // m = 0: first curve is the horizontal y = y0, second degenerates
        // to the vertical x = x0; values stay drawn from u, never NaN.
        for &(x, y) in &[(-0.9, -0.9), (0.9, 0.9), (0.2, -0.1), (-1.0, 1.0)] {
            let v = params.eval(x, y);
            assert!(v.is_finite());
            assert!(params.eval(x, y) >= 0.1 && v <= 0.4);
        }
        // North-east of (x0, y0): s1 true, s2 true.
        assert_eq!(params.eval(0.8, 0.5), 0.4);
        // South-west: s1 false, s2 false.
        assert_eq!(params.eval(-0.5, -0.8), 0.1);
    }

    #[test]
    fn unknown_family_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(draw_family(&mut rng, 0, 5).is_err());
        assert!(draw_family(&mut rng, 8, 5).is_err());
    }
}
