//! Troubled-cell indicators, the hysteresis switch, and the anisotropic
//! mesh-refinement estimator built from binary edge maps.

use crate::basis::apply_tensor2;
use crate::dgsem::Operators;
use crate::error::CoreError;
use crate::euler::pressure;
use crate::field::{ElemKind, HybridState, SolutionField};
use crate::mesh::Mesh2D;

/// Scalar quantity an indicator inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndicatorVariable {
    #[default]
    Density,
    Pressure,
}

/// Pointwise indicator variable of one element, in the element's stored
/// representation.
pub fn scalar_field(field: &SolutionField, e: usize, var: IndicatorVariable) -> Result<Vec<f64>, CoreError> {
    let m = field.n * field.n;
    match var {
        IndicatorVariable::Density => Ok(field.var(e, 0).to_vec()),
        IndicatorVariable::Pressure => {
            let mut out = vec![0.0; m];
            for node in 0..m {
                out[node] = pressure(field.state_at(e, node))?;
            }
            Ok(out)
        }
    }
}

/// Per-element troubled-cell indicator with hysteresis thresholds.
pub trait ElementFlagger: Send + Sync {
    /// One indicator value per element; larger means more troubled.
    fn evaluate(&self, state: &HybridState, ops: &Operators) -> Result<Vec<f64>, CoreError>;
    /// (upper, lower) switching thresholds.
    fn thresholds(&self) -> (f64, f64);
    fn name(&self) -> &'static str;
}

/// Relative energy of the highest Legendre modes, log10 scale.
#[derive(Debug, Clone)]
pub struct ModalIndicator {
    pub variable: IndicatorVariable,
    pub upper: f64,
    pub lower: f64,
}

impl ModalIndicator {
    /// Tuned switching thresholds for the Euler test cases.
    pub fn standard() -> Self {
        Self { variable: IndicatorVariable::Density, upper: -4.5, lower: -4.7 }
    }
}

pub const MODAL_CLAMP: f64 = -16.0;

/// I = log10 max_{i in {N-2, N-1, N}} |shell_i|^2 / |modes <= i|^2 on the
/// 2D modal coefficients, where shell i holds the modes of max degree i.
/// The mean shell is never counted, so constants sit at the clamp floor.
pub fn modal_indicator(nodal: &[f64], ops: &Operators) -> f64 {
    let n = ops.n();
    let deg = n - 1;
    let coeff = apply_tensor2(&ops.modal.fwd, nodal);
    let mut shell = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            let c = coeff[a * n + b];
            shell[a.max(b)] += c * c;
        }
    }
    let mut cum = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += shell[i];
        cum[i] = acc;
    }
    let lo = deg.saturating_sub(2).max(1);
    let mut best = 0.0f64;
    for i in lo..=deg {
        let ratio = shell[i] / cum[i].max(1e-30);
        best = best.max(ratio);
    }
    if best <= 0.0 {
        MODAL_CLAMP
    } else {
        best.log10().max(MODAL_CLAMP)
    }
}

impl ElementFlagger for ModalIndicator {
    fn evaluate(&self, state: &HybridState, ops: &Operators) -> Result<Vec<f64>, CoreError> {
        let mut out = vec![0.0; state.field.num_elems];
        for e in 0..state.field.num_elems {
            let mut w = scalar_field(&state.field, e, self.variable)?;
            if state.kinds[e] == ElemKind::Fv {
                w = apply_tensor2(&ops.transfer.v_fv_inv, &w);
            }
            out[e] = modal_indicator(&w, ops);
        }
        Ok(out)
    }

    fn thresholds(&self) -> (f64, f64) {
        (self.upper, self.lower)
    }

    fn name(&self) -> &'static str {
        "modal"
    }
}

/// Volume-weighted mean of the normalized second difference over sub-cells.
#[derive(Debug, Clone)]
pub struct JumpIndicator {
    pub variable: IndicatorVariable,
    pub upper: f64,
    pub lower: f64,
}

impl JumpIndicator {
    /// Tuned switching thresholds for the Euler test cases.
    pub fn standard() -> Self {
        Self { variable: IndicatorVariable::Density, upper: 0.012, lower: 0.01 }
    }
}

/// I = mean over sub-cells of (w_min - 2w + w_max)/(w_min + 2w + w_max),
/// where w_min/w_max run over the neighbors at offsets +-1, +-2 along each
/// direction, indices clamped to the element. `means` holds the sub-cell
/// mean values of a positive quantity.
pub fn jump_indicator(means: &[f64], n: usize) -> f64 {
    assert_eq!(means.len(), n * n);
    let mut total = 0.0;
    for j in 0..n as isize {
        for i in 0..n as isize {
            let w = means[j as usize * n + i as usize];
            let mut w_min = f64::INFINITY;
            let mut w_max = f64::NEG_INFINITY;
            for off in [-2isize, -1, 1, 2] {
                let ic = (i + off).clamp(0, n as isize - 1) as usize;
                let jc = (j + off).clamp(0, n as isize - 1) as usize;
                let wx = means[j as usize * n + ic];
                let wy = means[jc * n + i as usize];
                w_min = w_min.min(wx).min(wy);
                w_max = w_max.max(wx).max(wy);
            }
            total += (w_min - 2.0 * w + w_max) / (w_min + 2.0 * w + w_max);
        }
    }
    total / (n * n) as f64
}

impl ElementFlagger for JumpIndicator {
    fn evaluate(&self, state: &HybridState, ops: &Operators) -> Result<Vec<f64>, CoreError> {
        let n = ops.n();
        let mut out = vec![0.0; state.field.num_elems];
        for e in 0..state.field.num_elems {
            let mut w = scalar_field(&state.field, e, self.variable)?;
            if state.kinds[e] == ElemKind::Dg {
                w = apply_tensor2(&ops.transfer.v_fv, &w);
            }
            out[e] = jump_indicator(&w, n);
        }
        Ok(out)
    }

    fn thresholds(&self) -> (f64, f64) {
        (self.upper, self.lower)
    }

    fn name(&self) -> &'static str {
        "jump"
    }
}

/// One hysteresis step: switch DG -> FV above the upper threshold,
/// FV -> DG below the lower one, keep the kind inside the dead band.
pub fn hysteresis_update(current: ElemKind, value: f64, upper: f64, lower: f64) -> ElemKind {
    match current {
        ElemKind::Dg if value > upper => ElemKind::Fv,
        ElemKind::Fv if value < lower => ElemKind::Dg,
        kind => kind,
    }
}

/// Apply the hysteresis to every element.
pub fn decide_kinds(current: &[ElemKind], values: &[f64], upper: f64, lower: f64) -> Vec<ElemKind> {
    current
        .iter()
        .zip(values)
        .map(|(&k, &v)| hysteresis_update(k, v, upper, lower))
        .collect()
}

/// Binary per-node shock map of one element, row-major with x fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub n: usize,
    pub flags: Vec<u8>,
}

impl EdgeMap {
    pub fn zeros(n: usize) -> Self {
        Self { n, flags: vec![0; n * n] }
    }

    #[inline]
    pub fn get(&self, ix: usize, jy: usize) -> bool {
        self.flags[jy * self.n + ix] != 0
    }

    pub fn set(&mut self, ix: usize, jy: usize, on: bool) {
        self.flags[jy * self.n + ix] = on as u8;
    }

    pub fn any(&self) -> bool {
        self.flags.iter().any(|&f| f != 0)
    }

    /// Rotate the map by 90 degrees (x and y roles swap).
    pub fn rotated(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for j in 0..n {
            for i in 0..n {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }
}

/// Directional refinement demand of one edge map.
///
/// Per direction the lines are scanned; a line holding r flagged points
/// contributes sum_{s=1}^{r-1} (1.7^{s-1} + 1.7^s), so isolated points
/// (r <= 1) contribute nothing and wide smeared fronts grow geometrically.
/// I_x sums over the lines running along x (rows), I_y over columns.
pub fn meshref_indicator(map: &EdgeMap) -> (f64, f64) {
    let n = map.n;
    let contribution = |r: usize| -> f64 {
        let mut acc = 0.0;
        let mut pow = 1.0; // 1.7^{s-1}
        for _s in 1..r {
            acc += pow + pow * 1.7;
            pow *= 1.7;
        }
        acc
    };
    let mut i_x = 0.0;
    let mut i_y = 0.0;
    for line in 0..n {
        let r_row = (0..n).filter(|&i| map.get(i, line)).count();
        let r_col = (0..n).filter(|&j| map.get(line, j)).count();
        i_x += contribution(r_row);
        i_y += contribution(r_col);
    }
    (i_x, i_y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    None,
    X,
    Y,
    Xy,
}

impl SplitKind {
    fn from_levels(lx: u8, ly: u8) -> Self {
        match (lx > 0, ly > 0) {
            (false, false) => SplitKind::None,
            (true, false) => SplitKind::X,
            (false, true) => SplitKind::Y,
            (true, true) => SplitKind::Xy,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefineEntry {
    pub elem: usize,
    pub i_x: f64,
    pub i_y: f64,
    pub level_x: u8,
    pub level_y: u8,
}

impl RefineEntry {
    pub fn split(&self) -> SplitKind {
        SplitKind::from_levels(self.level_x, self.level_y)
    }

    pub fn level(&self) -> u8 {
        self.level_x.max(self.level_y)
    }
}

#[derive(Debug, Clone)]
pub struct RefinePlan {
    pub entries: Vec<RefineEntry>,
}

impl RefinePlan {
    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.split() == SplitKind::None)
    }
}

pub const MESHREF_LEVEL1: f64 = 33.0;
pub const MESHREF_LEVEL2: f64 = 172.0;

/// Two-pass anisotropic refinement plan.
///
/// Pass 1 marks a direction for splitting when its indicator reaches the
/// level-1 threshold. Pass 2 asks `child_maps` for edge maps of the split
/// children (re-running the localizer on the interpolated child solution)
/// and raises the direction to level 2 when any child reaches the level-2
/// threshold. Finally face neighbors are graded 2:1 per direction by
/// raising the lower side.
pub fn build_refine_plan(
    maps: &[EdgeMap],
    mesh: &Mesh2D,
    child_maps: impl FnMut(usize, SplitKind) -> Vec<EdgeMap>,
) -> RefinePlan {
    build_refine_plan_with(maps, mesh, child_maps, MESHREF_LEVEL1, MESHREF_LEVEL2)
}

/// `build_refine_plan` with explicit level thresholds in place of the
/// standard pair.
pub fn build_refine_plan_with(
    maps: &[EdgeMap],
    mesh: &Mesh2D,
    mut child_maps: impl FnMut(usize, SplitKind) -> Vec<EdgeMap>,
    level1: f64,
    level2: f64,
) -> RefinePlan {
    let ne = mesh.num_elems();
    assert_eq!(maps.len(), ne);
    let mut entries: Vec<RefineEntry> = maps
        .iter()
        .enumerate()
        .map(|(e, map)| {
            let (i_x, i_y) = meshref_indicator(map);
            RefineEntry {
                elem: e,
                i_x,
                i_y,
                level_x: (i_x >= level1) as u8,
                level_y: (i_y >= level1) as u8,
            }
        })
        .collect();

    for e in 0..ne {
        let split = entries[e].split();
        if split == SplitKind::None {
            continue;
        }
        let (mut want_x2, mut want_y2) = (false, false);
        for child in child_maps(e, split) {
            let (cx, cy) = meshref_indicator(&child);
            want_x2 |= entries[e].level_x > 0 && cx >= level2;
            want_y2 |= entries[e].level_y > 0 && cy >= level2;
        }
        if want_x2 {
            entries[e].level_x = 2;
        }
        if want_y2 {
            entries[e].level_y = 2;
        }
    }

    // 2:1 grading per direction: raise the lower face neighbor
    loop {
        let mut changed = false;
        for e in 0..ne {
            for nb in mesh.neighbors(e).into_iter().flatten() {
                if entries[e].level_x + 1 < entries[nb].level_x {
                    entries[e].level_x = entries[nb].level_x - 1;
                    changed = true;
                }
                if entries[e].level_y + 1 < entries[nb].level_y {
                    entries[e].level_y = entries[nb].level_y - 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    RefinePlan { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::legendre;
    use proptest::prelude::*;

    fn ops5() -> Operators {
        Operators::new(5)
    }

    #[test]
    fn modal_constant_hits_floor() {
        let ops = ops5();
        let nodal = vec![3.5; 36];
        assert_eq!(modal_indicator(&nodal, &ops), MODAL_CLAMP);
    }

    #[test]
    fn modal_low_degree_hits_floor() {
        let ops = ops5();
        // degree <= N-3 = 2: all retained shells are zero
        let mut nodal = vec![0.0; 36];
        for j in 0..6 {
            for i in 0..6 {
                let x = ops.basis.nodes[i];
                let y = ops.basis.nodes[j];
                nodal[j * 6 + i] = 1.0 + 0.3 * x + 0.2 * y * y + 0.1 * x * y;
            }
        }
        assert_eq!(modal_indicator(&nodal, &ops), MODAL_CLAMP);
    }

    #[test]
    fn modal_single_highest_mode_matches_coefficient_oracle() {
        let ops = ops5();
        let n = 6;
        // w = 1 + L_5(x): the x-degree-5 shell carries everything beyond the mean
        let mut nodal = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let (p5, _) = legendre(5, ops.basis.nodes[i]);
                nodal[j * n + i] = 1.0 + p5;
            }
        }
        // oracle: orthonormal coefficients by exact Gauss quadrature
        let mut coeff = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    for i in 0..n {
                        let psi_a = crate::basis::legendre_orthonormal(a, ops.basis.nodes[i]);
                        let psi_b = crate::basis::legendre_orthonormal(b, ops.basis.nodes[j]);
                        acc += ops.basis.weights[i] * ops.basis.weights[j] * nodal[j * n + i] * psi_a * psi_b;
                    }
                }
                coeff[a * n + b] = acc;
            }
        }
        let mut shell = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                shell[a.max(b)] += coeff[a * n + b] * coeff[a * n + b];
            }
        }
        let cum: f64 = shell.iter().sum();
        let expect = (shell[5] / cum).log10();
        let got = modal_indicator(&nodal, &ops);
        assert!((got - expect).abs() < 1e-10, "got {got}, expect {expect}");
        assert!(got > -4.5, "single-mode field must flag, got {got}");
    }

    #[test]
    fn modal_scale_invariant() {
        let ops = ops5();
        let mut nodal = vec![0.0; 36];
        for j in 0..6 {
            for i in 0..6 {
                let x = ops.basis.nodes[i];
                nodal[j * 6 + i] = 1.0 + 0.1 * x.powi(5);
            }
        }
        let a = modal_indicator(&nodal, &ops);
        let scaled: Vec<f64> = nodal.iter().map(|v| v * 7.25).collect();
        let b = modal_indicator(&scaled, &ops);
        assert!((a - b).abs() < 1e-12);
        assert!(a > MODAL_CLAMP);
    }

    #[test]
    fn jump_constant_is_zero() {
        assert_eq!(jump_indicator(&vec![2.0; 36], 6), 0.0);
    }

    #[test]
    fn jump_linear_stays_below_threshold() {
        // linear in x on sub-cell centers; interior rows cancel exactly,
        // clamped boundary stencils leave a small residual
        let n = 6;
        let mut means = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let x = (2.0 * i as f64 + 1.0) / n as f64 - 1.0;
                means[j * n + i] = 2.0 + 0.5 * x;
            }
        }
        let i = jump_indicator(&means, n);
        assert!(i.abs() < 0.012, "linear field flagged: {i}");
    }

    #[test]
    fn jump_step_flags() {
        let n = 6;
        let mut means = vec![1.0; n * n];
        for j in 0..n {
            for i in 3..n {
                means[j * n + i] = 2.0;
            }
        }
        // independent direct summation
        let mut oracle = 0.0;
        for j in 0..n as isize {
            for i in 0..n as isize {
                let at = |a: isize, b: isize| means[(b.clamp(0, 5) * 6 + a.clamp(0, 5)) as usize];
                let w = at(i, j);
                let nb = [at(i - 2, j), at(i - 1, j), at(i + 1, j), at(i + 2, j), at(i, j - 2), at(i, j - 1), at(i, j + 1), at(i, j + 2)];
                let lo = nb.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = nb.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                oracle += (lo - 2.0 * w + hi) / (lo + 2.0 * w + hi);
            }
        }
        oracle /= 36.0;
        let got = jump_indicator(&means, n);
        assert!((got - oracle).abs() < 1e-15);
        assert!(got > 0.012, "step must flag, got {got}");
    }

    #[test]
    fn jump_scale_invariant() {
        let n = 6;
        let means: Vec<f64> = (0..36).map(|k| 1.0 + 0.1 * ((k * 7 % 11) as f64)).collect();
        let a = jump_indicator(&means, n);
        let scaled: Vec<f64> = means.iter().map(|v| v * 3.0).collect();
        assert!((a - jump_indicator(&scaled, n)).abs() < 1e-14);
    }

    #[test]
    fn hysteresis_triple() {
        let (up, lo) = (-4.5, -4.7);
        assert_eq!(hysteresis_update(ElemKind::Dg, -4.4, up, lo), ElemKind::Fv);
        assert_eq!(hysteresis_update(ElemKind::Fv, -4.6, up, lo), ElemKind::Fv);
        assert_eq!(hysteresis_update(ElemKind::Fv, -4.8, up, lo), ElemKind::Dg);
        // dead band keeps DG too
        assert_eq!(hysteresis_update(ElemKind::Dg, -4.6, up, lo), ElemKind::Dg);
    }

    #[test]
    fn meshref_hand_values() {
        let n = 10;
        let mut two = EdgeMap::zeros(n);
        let mut three = EdgeMap::zeros(n);
        for j in 0..n {
            two.set(4, j, true);
            two.set(5, j, true);
            three.set(3, j, true);
            three.set(4, j, true);
            three.set(5, j, true);
        }
        let (ix2, _) = meshref_indicator(&two);
        let (ix3, _) = meshref_indicator(&three);
        assert!((ix2 - 27.0).abs() < 1e-12, "r=2 rows: {ix2}");
        assert!((ix3 - 72.9).abs() < 1e-12, "r=3 rows: {ix3}");
        assert_eq!(meshref_indicator(&EdgeMap::zeros(n)), (0.0, 0.0));
    }

    #[test]
    fn meshref_rotation_swaps_directions() {
        let mut map = EdgeMap::zeros(6);
        for i in 0..6 {
            map.set(i, 2, true);
            map.set(i, 3, true);
        }
        map.set(1, 5, true);
        let (ix, iy) = meshref_indicator(&map);
        let (rx, ry) = meshref_indicator(&map.rotated());
        assert_eq!((ix, iy), (ry, rx));
    }

    proptest! {
        #[test]
        fn meshref_monotone_under_added_point(bits in proptest::collection::vec(proptest::bool::ANY, 36), at in 0usize..36) {
            let mut map = EdgeMap::zeros(6);
            for (k, b) in bits.iter().enumerate() {
                map.flags[k] = *b as u8;
            }
            let (ix, iy) = meshref_indicator(&map);
            let mut more = map.clone();
            more.flags[at] = 1;
            let (jx, jy) = meshref_indicator(&more);
            prop_assert!(jx >= ix - 1e-12);
            prop_assert!(jy >= iy - 1e-12);
        }
    }

    #[test]
    fn refine_plan_thresholds_and_rotation() {
        let mesh = Mesh2D::cartesian(0.0, 0.0, 1.0, 1.0, 2, 2, [0, 0, 0, 0], false, false).unwrap();
        let n = 10;
        // element 0: structure 4 wide in x, 3 tall in y.
        // I_x = 3 rows * c(4) = 45.3 (splits), I_y = 4 cols * c(3) = 29.2 (not)
        let mut hot = EdgeMap::zeros(n);
        for j in 3..6 {
            for i in 2..6 {
                hot.set(i, j, true);
            }
        }
        let maps = vec![hot.clone(), EdgeMap::zeros(n), EdgeMap::zeros(n), EdgeMap::zeros(n)];
        let plan = build_refine_plan(&maps, &mesh, |_, _| vec![]);
        assert_eq!(plan.entries[0].split(), SplitKind::X);
        assert_eq!(plan.entries[0].level(), 1);
        assert_eq!(plan.entries[1].split(), SplitKind::None);
        let c4 = 2.7 + 1.7 * 2.7 + 1.7f64.powi(2) * 2.7;
        assert!((plan.entries[0].i_x - 3.0 * c4).abs() < 1e-12);

        let rotated: Vec<EdgeMap> = maps.iter().map(EdgeMap::rotated).collect();
        let rplan = build_refine_plan(&rotated, &mesh, |_, _| vec![]);
        assert_eq!(rplan.entries[0].split(), SplitKind::Y);
        assert!((rplan.entries[0].i_y - plan.entries[0].i_x).abs() < 1e-12);
    }

    #[test]
    fn refine_plan_second_pass_and_grading() {
        let mesh = Mesh2D::cartesian(0.0, 0.0, 3.0, 1.0, 3, 1, [0, 0, 0, 0], false, false).unwrap();
        let n = 10;
        let mut hot = EdgeMap::zeros(n);
        for j in 0..n {
            for i in 2..8 {
                hot.set(i, j, true);
            }
        }
        // element 0 splits in x; its children stay hot enough for level 2
        let maps = vec![hot.clone(), EdgeMap::zeros(n), EdgeMap::zeros(n)];
        let plan = build_refine_plan(&maps, &mesh, |e, _| if e == 0 { vec![hot.clone(), hot.clone()] } else { vec![] });
        assert_eq!(plan.entries[0].level_x, 2);
        // grading: middle neighbor must be raised to level 1 in x
        assert_eq!(plan.entries[1].level_x, 1);
        assert_eq!(plan.entries[2].level_x, 0);
        assert!(!plan.is_empty());
    }

    #[test]
    fn empty_plan() {
        let mesh = Mesh2D::cartesian(0.0, 0.0, 1.0, 1.0, 2, 2, [0, 0, 0, 0], false, false).unwrap();
        let maps = vec![EdgeMap::zeros(10), EdgeMap::zeros(10), EdgeMap::zeros(10), EdgeMap::zeros(10)];
        let plan = build_refine_plan(&maps, &mesh, |_, _| vec![]);
        assert!(plan.is_empty());
    }

    #[test]
    fn explicit_thresholds_override_the_standard_pair() {
        let mesh = Mesh2D::cartesian(0.0, 0.0, 1.0, 1.0, 2, 2, [0, 0, 0, 0], false, false).unwrap();
        let n = 10;
        let mut spot = EdgeMap::zeros(n);
        spot.set(4, 4, true);
        spot.set(5, 4, true); // one 2-wide run: I_x = 2.7, far below the standard level
        let maps = vec![spot, EdgeMap::zeros(n), EdgeMap::zeros(n), EdgeMap::zeros(n)];
        let standard = build_refine_plan(&maps, &mesh, |_, _| vec![]);
        assert!(standard.is_empty());
        let loose = build_refine_plan_with(&maps, &mesh, |_, _| vec![], 2.0, 1e9);
        assert_eq!(loose.entries[0].split(), SplitKind::X);
        assert_eq!(loose.entries[0].level(), 1);
    }
}
