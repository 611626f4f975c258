//! Five-stage fourth-order low-storage Runge-Kutta (Carpenter-Kennedy).

/// Stage coefficients of the 5-stage 4th-order low-storage scheme.
const RK_A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
const RK_B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
const RK_C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// Advance `u` by one step of size `dt`.
///
/// `rhs(u, t, out)` must write du/dt into `out`. `g` is the low-storage
/// register and must have the same length as `u`; its incoming content is
/// ignored. `scratch` receives the rhs evaluations.
pub fn rk_step<E>(
    u: &mut [f64],
    g: &mut [f64],
    scratch: &mut [f64],
    t: f64,
    dt: f64,
    mut rhs: impl FnMut(&[f64], f64, &mut [f64]) -> Result<(), E>,
) -> Result<(), E> {
    assert_eq!(u.len(), g.len());
    assert_eq!(u.len(), scratch.len());
    g.fill(0.0);
    for s in 0..5 {
        rhs(u, t + RK_C[s] * dt, scratch)?;
        let (a, b) = (RK_A[s], RK_B[s]);
        for i in 0..u.len() {
            g[i] = a * g[i] + dt * scratch[i];
            u[i] += b * g[i];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// u' = -u, exact solution e^{-t}; one step must be 4th order accurate.
    #[test]
    fn scalar_decay_order_four() {
        let mut errs = Vec::new();
        for &steps in &[8usize, 16, 32] {
            let dt = 1.0 / steps as f64;
            let mut u = [1.0];
            let mut g = [0.0];
            let mut k = [0.0];
            let mut t = 0.0;
            for _ in 0..steps {
                rk_step(&mut u, &mut g, &mut k, t, dt, |u, _t, out| {
                    out[0] = -u[0];
                    Ok::<(), ()>(())
                })
                .unwrap();
                t += dt;
            }
            errs.push((u[0] - (-1.0f64).exp()).abs());
        }
        let p1 = (errs[0] / errs[1]).log2();
        let p2 = (errs[1] / errs[2]).log2();
        assert!(p1 > 3.7 && p2 > 3.7, "orders {p1} {p2}");
    }

    /// Nonautonomous check: u' = 2t exactly integrated in t needs the stage
    /// times; u(1) = 1.
    #[test]
    fn stage_times_enter() {
        let mut u = [0.0];
        let mut g = [0.0];
        let mut k = [0.0];
        rk_step(&mut u, &mut g, &mut k, 0.0, 1.0, |_u, t, out| {
            out[0] = 2.0 * t;
            Ok::<(), ()>(())
        })
        .unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12, "got {}", u[0]);
    }
}
