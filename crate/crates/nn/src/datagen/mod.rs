//! Synthetic training data for the shock-detection networks.
//!
//! Each sample is an (N+1) x (N+1) image of a scalar function on the
//! reference square [-1, 1]^2, evaluated the same way the solver produces
//! its inputs: the function is sampled exactly at the degree-2N nodes of
//! the requested family, L2-projected to degree N per direction, and
//! normalized into [-1, 1] with non-negative values preferred. Labels mark
//! the nodes straddling a genuine discontinuity or derivative kink of the
//! underlying function (computed analytically, not from the projected
//! image), so the network learns to see through projection over- and
//! undershoots.
//!
//! Seven function families cover the cases: three smooth (linear,
//! truncated Fourier, Gaussian bumps) that never produce an edge label,
//! and four non-smooth (piecewise-constant sectors, absolute-value ridge,
//! rectified ramps, high-frequency oscillations with an offset kink).

pub(crate) mod dataset;
mod families;
mod label;

pub use dataset::{
    build_dataset, load_dataset, save_dataset, target_table, ClassCounts, Dataset, DatasetSpec,
    GenProgress, Split,
};
pub use families::{draw_family, frequency_cap, FamilyDraw, FamilyParams, NUM_FAMILIES};
pub use label::label_element;

/// Per-family (class-0, class-1) sample targets for the three standard
/// corpora. Families are indexed 1..=7; row k is family k+1.
///
/// Targets are per-family; corpus totals follow by summation. The train
/// splits are balanced to within 10% between the classes; the validation
/// splits are not (they mirror what rejection sampling of the class-1
/// conditions naturally yields).
pub const TRAIN_TARGETS_GAUSS_LOW: [(u64, u64); 7] = [
    (20311, 0),
    (66288, 0),
    (6402, 0),
    (51, 37266),
    (2377, 16297),
    (102, 32308),
    (59, 18551),
];

/// Validation-split targets paired with [`TRAIN_TARGETS_GAUSS_LOW`].
pub const VAL_TARGETS_GAUSS_LOW: [(u64, u64); 7] = [
    (2046, 0),
    (6638, 0),
    (619, 0),
    (6, 3758),
    (247, 1618),
    (9, 3206),
    (8, 1853),
];

/// Train targets for Gauss-node corpora at degree 8 and above.
pub const TRAIN_TARGETS_GAUSS_HIGH: [(u64, u64); 7] = [
    (20400, 0),
    (66400, 0),
    (6400, 0),
    (40, 40023),
    (2067, 15660),
    (116, 31094),
    (80, 18520),
];

/// Validation-split targets paired with [`TRAIN_TARGETS_GAUSS_HIGH`].
pub const VAL_TARGETS_GAUSS_HIGH: [(u64, u64); 7] = [
    (2388, 0),
    (7289, 0),
    (1195, 0),
    (95, 6494),
    (251, 2184),
    (21, 4206),
    (2, 2938),
];

/// Train targets for equispaced-node corpora (sub-cell localizer).
pub const TRAIN_TARGETS_EQUI: [(u64, u64); 7] = [
    (21327, 0),
    (69190, 0),
    (6706, 0),
    (4248, 35364),
    (2281, 17239),
    (80, 33858),
    (253, 19454),
];

/// Validation-split targets paired with [`TRAIN_TARGETS_EQUI`].
pub const VAL_TARGETS_EQUI: [(u64, u64); 7] = [
    (4253, 0),
    (13769, 0),
    (1345, 0),
    (861, 7115),
    (469, 3386),
    (17, 6922),
    (37, 3826),
];

/// Magnitude floor below which a sample image counts as constant: no
/// contrast condition can fire and the sample is class 0.
pub const MAGNITUDE_FLOOR: f64 = 0.01;

/// Relative jump threshold: families 4-6 label a sample discontinuous when
/// the variation exceeds 10% of the magnitude.
pub const JUMP_THRESHOLD: f64 = 0.1;

/// Family 7 uses a doubled threshold, since its smooth oscillation already
/// produces large variation.
pub const JUMP_THRESHOLD_OSC: f64 = 0.2;

/// Shift-and-scale an element image in place so that values are
/// non-negative where possible and bounded by 1 in magnitude: first, if
/// the minimum is negative, subtract it; then, if the largest magnitude
/// exceeds 1, divide by it. Applying it twice changes nothing.
pub fn normalize(values: &mut [f64]) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        for v in values.iter_mut() {
            *v -= min;
        }
    }
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs > 1.0 {
        for v in values.iter_mut() {
            *v /= max_abs;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_shifts_then_scales() {
        let mut v = vec![-0.5, 0.0, 1.5];
        normalize(&mut v);
        // Shift by 0.5 gives [0, 0.5, 2]; scale by 2 gives [0, 0.25, 1].
        assert_eq!(v, vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn normalize_leaves_unit_interval_data_alone() {
        let mut v = vec![0.2, 0.5, 0.8];
        normalize(&mut v);
        assert_eq!(v, vec![0.2, 0.5, 0.8]);
    }

    #[test]
    fn normalize_boundary_case_reaches_exactly_one() {
        // Shift by 2 gives [0, 1]: max magnitude is exactly 1, no scaling.
        let mut v = vec![-2.0, -1.0];
        normalize(&mut v);
        assert_eq!(v, vec![0.0, 1.0]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut v = vec![-3.25, 0.1, 0.7, 2.0, -0.4];
        normalize(&mut v);
        let once = v.clone();
        normalize(&mut v);
        assert_eq!(v, once);
        assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn target_tables_sum_to_their_corpus_sizes() {
        let sum = |t: &[(u64, u64); 7]| -> (u64, u64) {
            t.iter().fold((0, 0), |(a, b), &(c0, c1)| (a + c0, b + c1))
        };
        let (t0, t1) = sum(&TRAIN_TARGETS_GAUSS_LOW);
        assert_eq!((t0, t1), (95_590, 104_422));
        let (v0, v1) = sum(&VAL_TARGETS_GAUSS_LOW);
        assert_eq!((v0, v1), (9_573, 10_435));
        let (t0, t1) = sum(&TRAIN_TARGETS_GAUSS_HIGH);
        assert_eq!((t0, t1), (95_503, 105_297));
        let (v0, v1) = sum(&VAL_TARGETS_GAUSS_HIGH);
        assert_eq!((v0, v1), (11_241, 15_822));
        let (t0, t1) = sum(&TRAIN_TARGETS_EQUI);
        assert_eq!((t0, t1), (104_085, 105_915));
        let (v0, v1) = sum(&VAL_TARGETS_EQUI);
        assert_eq!((v0, v1), (20_751, 21_249));
    }

    #[test]
    fn train_splits_are_class_balanced_within_ten_percent() {
        for t in [
            &TRAIN_TARGETS_GAUSS_LOW,
            &TRAIN_TARGETS_GAUSS_HIGH,
            &TRAIN_TARGETS_EQUI,
        ] {
            let (c0, c1) = t
                .iter()
                .fold((0u64, 0u64), |(a, b), &(x, y)| (a + x, b + y));
            let imbalance = (c0 as f64 - c1 as f64).abs() / (c0 + c1) as f64;
            assert!(imbalance < 0.10, "imbalance {imbalance}");
        }
    }
}
