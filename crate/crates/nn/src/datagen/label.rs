//! Exact edge-map labeling for the non-smooth function families.
//!
//! A label marks the nodes that bound a discontinuity (or derivative
//! kink) of the underlying analytic function, computed from the function's
//! geometry rather than from its sampled values. Along every node line of
//! the tensor grid, the discontinuity curves restrict to polynomials of
//! degree at most two in the running coordinate; their sign-changing roots
//! are the crossing positions. Each crossing flags the two nodes that
//! straddle it (one node if it hits a node exactly or falls between the
//! element edge and the outermost node).

use super::families::FamilyParams;

/// Coordinate tolerance: crossings closer than this to a node count as
/// exact hits, and positions this far beyond the element are ignored.
pub const COORD_TOL: f64 = 1e-12;

/// Which coordinate runs along the node line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineDir {
    /// A vertical line x = s; crossings are y-positions.
    AlongY,
    /// A horizontal line y = s; crossings are x-positions.
    AlongX,
}

/// Sign-changing roots of alpha t^2 + beta t + gamma. Double roots touch
/// without crossing and produce no jump along the line, so they are not
/// reported; neither is a vanishing polynomial (a curve parallel to or on
/// the line).
fn sign_changing_roots(alpha: f64, beta: f64, gamma: f64, out: &mut Vec<f64>) {
    if alpha.abs() < COORD_TOL {
        if beta.abs() >= COORD_TOL {
            out.push(-gamma / beta);
        }
        return;
    }
    let disc = beta * beta - 4.0 * alpha * gamma;
    if disc <= 0.0 {
        return;
    }
    // Citardauq-stable form: avoids cancellation for small roots.
    let sq = disc.sqrt();
    let q = -0.5 * (beta + beta.signum() * sq);
    out.push(q / alpha);
    if q.abs() >= f64::MIN_POSITIVE {
        out.push(gamma / q);
    }
}

/// Crossing positions of the function's discontinuity set along one node
/// line: for [`LineDir::AlongY`] the line {(s, t)}, for
/// [`LineDir::AlongX`] the line {(t, s)}.
pub fn crossings_on_line(params: &FamilyParams, s: f64, dir: LineDir) -> Vec<f64> {
    let mut out = Vec::new();
    match params {
        FamilyParams::Linear { .. }
        | FamilyParams::Fourier { .. }
        | FamilyParams::Bumps { .. }
        | FamilyParams::Oscillation { .. } => {}
        FamilyParams::Sectors { m, x0, y0, d, .. } => {
            // Curve A: (y - y0) - m (x - x0)^d = 0.
            // Curve B (division-free): m (y - y0) + (x - x0)^d = 0.
            match dir {
                LineDir::AlongY => {
                    let dx = (s - x0).powi(*d as i32);
                    sign_changing_roots(0.0, 1.0, -y0 - m * dx, &mut out);
                    sign_changing_roots(0.0, *m, -m * y0 + dx, &mut out);
                }
                LineDir::AlongX => {
                    if *d == 1 {
                        sign_changing_roots(0.0, -m, (s - y0) + m * x0, &mut out);
                        sign_changing_roots(0.0, 1.0, m * (s - y0) - x0, &mut out);
                    } else {
                        sign_changing_roots(-m, 2.0 * m * x0, -m * x0 * x0 + (s - y0), &mut out);
                        sign_changing_roots(1.0, -2.0 * x0, x0 * x0 + m * (s - y0), &mut out);
                    }
                }
            }
        }
        FamilyParams::Ridge { m, x0, y0, .. } => match dir {
            // Kink line: (y - y0) - m (x - x0) = 0.
            LineDir::AlongY => {
                sign_changing_roots(0.0, 1.0, -y0 - m * (s - x0), &mut out);
            }
            LineDir::AlongX => {
                sign_changing_roots(0.0, -m, (s - y0) + m * x0, &mut out);
            }
        },
        FamilyParams::Ramps { separate, b1, b2, x0, y0, .. } => {
            if *separate {
                // Kink lines x = x0 (if the x-ramp is active) and y = y0
                // (if the y-ramp is active).
                match dir {
                    LineDir::AlongY => {
                        sign_changing_roots(0.0, *b2, -b2 * y0, &mut out);
                    }
                    LineDir::AlongX => {
                        sign_changing_roots(0.0, *b1, -b1 * x0, &mut out);
                    }
                }
            } else {
                // Single kink line b1 (x - x0) + b2 (y - y0) = 0.
                match dir {
                    LineDir::AlongY => {
                        sign_changing_roots(0.0, *b2, b1 * (s - x0) - b2 * y0, &mut out);
                    }
                    LineDir::AlongX => {
                        sign_changing_roots(0.0, *b1, b2 * (s - y0) - b1 * x0, &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Apply the straddle rule for one crossing at position `t` on a line with
/// the given ascending node coordinates: an exact node hit flags that node
/// alone; a position between two nodes flags both; a position between the
/// element edge and the outermost node flags that outermost node; anything
/// beyond the element is ignored.
pub fn flag_crossing(nodes: &[f64], t: f64, mut flag: impl FnMut(usize)) {
    if !t.is_finite() || t < -1.0 - COORD_TOL || t > 1.0 + COORD_TOL {
        return;
    }
    let last = nodes.len() - 1;
    for (k, &xk) in nodes.iter().enumerate() {
        if (t - xk).abs() < COORD_TOL {
            flag(k);
            return;
        }
    }
    if t < nodes[0] {
        flag(0);
        return;
    }
    if t > nodes[last] {
        flag(last);
        return;
    }
    let upper = nodes.partition_point(|&xk| xk < t);
    flag(upper - 1);
    flag(upper);
}

/// Binary edge map of a single-element sample on [-1, 1]^2. Labels live at
/// the tensor grid of the given ascending 1D `nodes`, stored row-major
/// with x fastest (index jy * nodes.len() + ix) to match the image layout.
///
/// The oscillation family is special: it has no discontinuity curves, and
/// instead marks the nodes attaining the largest magnitude, where ringing
/// concentrates.
pub fn label_element(params: &FamilyParams, nodes: &[f64]) -> Vec<u8> {
    let n = nodes.len();
    let mut y = vec![0u8; n * n];
    if let FamilyParams::Oscillation { .. } = params {
        let mut mags = vec![0.0f64; n * n];
        let mut max = f64::NEG_INFINITY;
        for (jy, &yv) in nodes.iter().enumerate() {
            for (ix, &xv) in nodes.iter().enumerate() {
                let m = params.eval(xv, yv).abs();
                mags[jy * n + ix] = m;
                max = max.max(m);
            }
        }
        for (flag, &m) in y.iter_mut().zip(&mags) {
            if m >= max - COORD_TOL {
                *flag = 1;
            }
        }
        return y;
    }
    for (ix, &xv) in nodes.iter().enumerate() {
        for t in crossings_on_line(params, xv, LineDir::AlongY) {
            flag_crossing(nodes, t, |jy| y[jy * n + ix] = 1);
        }
    }
    for (jy, &yv) in nodes.iter().enumerate() {
        for t in crossings_on_line(params, yv, LineDir::AlongX) {
            flag_crossing(nodes, t, |ix| y[jy * n + ix] = 1);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::families::{draw_family, sector_sides};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use shocknet_core::basis::{equispaced_nodes, gauss_nodes};

    fn gauss(n: usize) -> Vec<f64> {
        gauss_nodes(n).0
    }

    #[test]
    fn straddle_rule_flags_two_one_or_edge_nodes() {
        let nodes = vec![-0.75, -0.25, 0.25, 0.75];
        let collect = |t: f64| {
            let mut f = Vec::new();
            flag_crossing(&nodes, t, |k| f.push(k));
            f
        };
        assert_eq!(collect(0.0), vec![1, 2]); // between nodes
        assert_eq!(collect(0.25), vec![2]); // exact hit
        assert_eq!(collect(-0.9), vec![0]); // edge margin, low side
        assert_eq!(collect(0.99), vec![3]); // edge margin, high side
        assert_eq!(collect(1.2), Vec::<usize>::new()); // outside
        assert_eq!(collect(-1.0), vec![0]); // exactly on the element edge
        assert_eq!(collect(f64::NAN), Vec::<usize>::new());
    }

    #[test]
    fn horizontal_ridge_flags_the_two_straddling_rows() {
        // m = 0 makes the kink line horizontal at y = y0 = 0; with Gauss
        // nodes it falls between the two middle rows of every column.
        let params = FamilyParams::Ridge { a: 0.5, m: 0.0, x0: 0.3, y0: 0.0, c: 0.1 };
        let nodes = gauss(6);
        let y = label_element(&params, &nodes);
        for jy in 0..6 {
            for ix in 0..6 {
                let expect = u8::from(jy == 2 || jy == 3);
                assert_eq!(y[jy * 6 + ix], expect, "node ({ix}, {jy})");
            }
        }
    }

    #[test]
    fn ridge_on_a_node_line_flags_that_row_alone() {
        // Equispaced nodes at +-0.75, +-0.25: a kink exactly on y = 0.25.
        let params = FamilyParams::Ridge { a: 1.0, m: 0.0, x0: 0.0, y0: 0.25, c: 0.0 };
        let nodes = equispaced_nodes(4).0;
        let y = label_element(&params, &nodes);
        for jy in 0..4 {
            for ix in 0..4 {
                assert_eq!(y[jy * 4 + ix], u8::from(jy == 2));
            }
        }
    }

    #[test]
    fn diagonal_sector_cross_labels_both_lines() {
        // Straight sector curves through the origin with slope 1: the
        // lines y = x and y = -x. Along the vertical line x = s the
        // crossings sit at t = s and t = -s.
        let params =
            FamilyParams::Sectors { u: [0.9, 0.1, 0.5, 0.3], m: 1.0, x0: 0.0, y0: 0.0, d: 1 };
        let nodes = gauss(4);
        let y = label_element(&params, &nodes);
        // Column ix crosses at y = +-nodes[ix]: exact node hits at jy = ix
        // and jy = 3 - ix (Gauss nodes are symmetric). Horizontal lines
        // add the mirrored hits, so the expected map is exactly the two
        // diagonals.
        for jy in 0..4 {
            for ix in 0..4 {
                let expect = u8::from(jy == ix || jy == 3 - ix);
                assert_eq!(y[jy * 4 + ix], expect, "node ({ix}, {jy})");
            }
        }
    }

    #[test]
    fn separate_ramps_flag_their_two_axis_aligned_kink_lines() {
        let params = FamilyParams::Ramps {
            separate: true,
            a2: 1.0,
            a3: -1.0,
            b1: 0.5,
            b2: -0.7,
            x0: 0.25,
            y0: -0.25,
            c: 0.2,
        };
        let nodes = equispaced_nodes(4).0; // +-0.75, +-0.25
        let y = label_element(&params, &nodes);
        // Kinks on x = 0.25 (exact node column 2) and y = -0.25 (exact
        // node row 1).
        for jy in 0..4 {
            for ix in 0..4 {
                let expect = u8::from(ix == 2 || jy == 1);
                assert_eq!(y[jy * 4 + ix], expect, "node ({ix}, {jy})");
            }
        }
    }

    #[test]
    fn oscillation_flags_exactly_the_maximum_magnitude_nodes() {
        let params = FamilyParams::Oscillation {
            a1: 0.4,
            a2: -0.3,
            a3: 1.5,
            x0: 0.2,
            y0: -0.4,
            c: 0.3,
            fny: 2.5,
        };
        let nodes = gauss(6);
        let y = label_element(&params, &nodes);
        let mut max = f64::NEG_INFINITY;
        let mut vals = vec![0.0; 36];
        for (jy, &yv) in nodes.iter().enumerate() {
            for (ix, &xv) in nodes.iter().enumerate() {
                vals[jy * 6 + ix] = params.eval(xv, yv).abs();
                max = max.max(vals[jy * 6 + ix]);
            }
        }
        assert!(y.iter().any(|&f| f == 1));
        for k in 0..36 {
            assert_eq!(y[k] == 1, vals[k] >= max - COORD_TOL, "node {k}");
        }
    }

    /// Boolean fingerprint of which smooth branch a point belongs to; a
    /// crossing is wherever it changes along a line.
    fn branch_id(params: &FamilyParams, x: f64, y: f64) -> u8 {
        match params {
            FamilyParams::Sectors { m, x0, y0, d, .. } => {
                let (s1, s2) = sector_sides(*m, *x0, *y0, *d, x, y);
                (s1 as u8) << 1 | s2 as u8
            }
            FamilyParams::Ridge { m, x0, y0, .. } => {
                u8::from((y - y0) - m * (x - x0) >= 0.0)
            }
            FamilyParams::Ramps { separate, b1, b2, x0, y0, .. } => {
                if *separate {
                    (u8::from(b1 * (x - x0) > 0.0)) << 1 | u8::from(b2 * (y - y0) > 0.0)
                } else {
                    u8::from(b1 * (x - x0) + b2 * (y - y0) > 0.0)
                }
            }
            _ => 0,
        }
    }

    /// Scan-and-bisect reference labeling: walk each node line at fine
    /// resolution, bracket every branch change, bisect it to 1e-13, and
    /// apply the shared straddle rule. Root-finding is fully independent
    /// of the closed-form solver under test.
    fn label_by_scanning(params: &FamilyParams, nodes: &[f64]) -> Vec<u8> {
        let n = nodes.len();
        let mut y = vec![0u8; n * n];
        let scan = 1500usize;
        let line = |fixed: f64, dir: LineDir, flags: &mut dyn FnMut(usize)| {
            let at = |t: f64| match dir {
                LineDir::AlongY => branch_id(params, fixed, t),
                LineDir::AlongX => branch_id(params, t, fixed),
            };
            let mut prev = at(-1.0);
            for i in 0..scan {
                let t1 = -1.0 + 2.0 * (i + 1) as f64 / scan as f64;
                let cur = at(t1);
                if cur != prev {
                    // Bisect the bracket to pin the crossing down.
                    let mut lo = -1.0 + 2.0 * i as f64 / scan as f64;
                    let mut hi = t1;
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if at(mid) == prev {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    flag_crossing(nodes, 0.5 * (lo + hi), &mut *flags);
                    prev = cur;
                }
            }
        };
        for ix in 0..n {
            line(nodes[ix], LineDir::AlongY, &mut |jy| y[jy * n + ix] = 1);
        }
        for jy in 0..n {
            line(nodes[jy], LineDir::AlongX, &mut |ix| y[jy * n + ix] = 1);
        }
        y
    }

    #[test]
    fn closed_form_labels_match_scanning_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let nodes_g = gauss(6);
        let nodes_e = equispaced_nodes(6).0;
        let mut total = 0usize;
        let mut agree = 0usize;
        for trial in 0..1000 {
            let family = 4 + (trial % 3) as u8; // families 4, 5, 6
            let draw = draw_family(&mut rng, family, 5).unwrap();
            let nodes = if trial % 2 == 0 { &nodes_g } else { &nodes_e };
            let ours = label_element(&draw.params, nodes);
            let reference = label_by_scanning(&draw.params, nodes);
            total += 1;
            if ours == reference {
                agree += 1;
            }
        }
        let rate = agree as f64 / total as f64;
        assert!(rate >= 0.999, "agreement rate {rate} ({agree}/{total})");
    }

    #[test]
    fn sector_discontinuity_in_edge_margin_flags_outermost_row() {
        // A steep parabola pair whose vertex sits between the outermost node
        // line and the element edge: every crossing lands in that margin, and
        // the straddle rule maps each one to the outermost node. The flagged
        // set is exactly the top row -- the map is never empty, because a
        // sector vertex always lies inside the element, so the class-0 quota
        // for this family is filled by the magnitude condition alone.
        let n = 6;
        let nodes = gauss(n);
        let outermost = nodes[n - 1];
        assert!(outermost < 0.98, "vertex must sit outside the node range");
        let params = FamilyParams::Sectors {
            u: [0.0, 0.3, 0.6, 1.0],
            m: 100.0,
            x0: 0.0,
            y0: 0.98,
            d: 2,
        };
        // Curve A (opens up from the vertex) exits the element immediately;
        // curve B (opens down, very steep) crosses each vertical node line in
        // the margin and re-enters horizontal rows only beyond |x| > 2.
        let labels = label_element(&params, &nodes);
        for jy in 0..n {
            for ix in 0..n {
                let expected = u8::from(jy == n - 1);
                assert_eq!(
                    labels[jy * n + ix],
                    expected,
                    "node ({ix}, {jy}) in {labels:?}"
                );
            }
        }

        // The same pair centered in the element flags interior nodes too.
        let params = FamilyParams::Sectors {
            u: [0.0, 0.3, 0.6, 1.0],
            m: 100.0,
            x0: 0.0,
            y0: 0.0,
            d: 2,
        };
        let labels = label_element(&params, &nodes);
        let interior: usize = labels[n..(n - 1) * n].iter().map(|&f| f as usize).sum();
        assert!(interior > 0, "expected interior flags, got {labels:?}");
    }
}
