//! Corpus assembly and on-disk format.
//!
//! Generation is quota-driven: each (family, class) pair has a target
//! count taken from the standard tables (scaled if requested), and draws
//! are rejection-sampled until every quota is met. Each draw gets its own
//! counter-keyed random stream, so the corpus is bitwise reproducible for
//! any thread count: parallelism only affects how draws are evaluated, not
//! what they contain, and candidates are consumed strictly in draw order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use shocknet_core::basis::{apply_tensor2, build_degree_projection, NodalBasis1D, NodeFamily};
use shocknet_core::mat::Mat;

use super::families::{draw_family, FamilyParams};
use super::label::label_element;
use super::{
    normalize, JUMP_THRESHOLD, JUMP_THRESHOLD_OSC, MAGNITUDE_FLOOR, TRAIN_TARGETS_EQUI,
    TRAIN_TARGETS_GAUSS_HIGH, TRAIN_TARGETS_GAUSS_LOW, VAL_TARGETS_EQUI, VAL_TARGETS_GAUSS_HIGH,
    VAL_TARGETS_GAUSS_LOW,
};
use crate::error::NnError;

/// File magic of the sample-corpus format.
pub const DATASET_MAGIC: &[u8; 8] = b"SHOCKDS1";
/// Format version written and accepted.
pub const DATASET_VERSION: u32 = 1;

/// Which split of the standard tables to target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    fn id(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
        }
    }
}

/// Per-family (class 0, class 1) sample counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub per_family: [(u64, u64); 7],
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.per_family.iter().map(|&(a, b)| a + b).sum()
    }

    pub fn class_totals(&self) -> (u64, u64) {
        self.per_family
            .iter()
            .fold((0, 0), |(a, b), &(c0, c1)| (a + c0, b + c1))
    }
}

/// What to generate.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    /// Polynomial degree N of the target images ((N+1)^2 pixels).
    pub degree: usize,
    /// Node family the images are sampled on.
    pub node_family: NodeFamily,
    pub split: Split,
    /// Scale factor applied to every target count (rounded per entry);
    /// 1.0 reproduces the standard corpus sizes.
    pub scale: f64,
    pub seed: u64,
}

/// Target table for a (node family, degree, split) combination. Gauss
/// corpora come in two resolution regimes with slightly different counts;
/// the boundary sits between degrees 7 and 8.
pub fn target_table(node_family: NodeFamily, degree: usize, split: Split) -> [(u64, u64); 7] {
    match (node_family, split) {
        (NodeFamily::Gauss, Split::Train) if degree <= 7 => TRAIN_TARGETS_GAUSS_LOW,
        (NodeFamily::Gauss, Split::Val) if degree <= 7 => VAL_TARGETS_GAUSS_LOW,
        (NodeFamily::Gauss, Split::Train) => TRAIN_TARGETS_GAUSS_HIGH,
        (NodeFamily::Gauss, Split::Val) => VAL_TARGETS_GAUSS_HIGH,
        (NodeFamily::Equispaced, Split::Train) => TRAIN_TARGETS_EQUI,
        (NodeFamily::Equispaced, Split::Val) => VAL_TARGETS_EQUI,
    }
}

/// An assembled corpus, kept flat in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub degree: u32,
    pub node_family: NodeFamily,
    /// Images, sample-major, px*px values each, row-major with x fastest.
    pub x: Vec<f32>,
    /// Edge maps, sample-major, px*px values each.
    pub y: Vec<u8>,
    /// Family id (1..=7) per sample.
    pub families: Vec<u8>,
    /// Class (0/1) per sample.
    pub classes: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    /// Pixels per image side.
    pub fn px(&self) -> usize {
        self.degree as usize + 1
    }

    pub fn sample_x(&self, i: usize) -> &[f32] {
        let p = self.px() * self.px();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn sample_y(&self, i: usize) -> &[u8] {
        let p = self.px() * self.px();
        &self.y[i * p..(i + 1) * p]
    }

    /// Recount samples per family and class.
    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for (&f, &k) in self.families.iter().zip(&self.classes) {
            let entry = &mut c.per_family[(f - 1) as usize];
            if k == 0 {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
        c
    }
}

/// Progress snapshot handed to the generation callback after each chunk.
#[derive(Debug, Clone, Copy)]
pub struct GenProgress {
    pub family: u8,
    /// Samples accepted for this family so far (both classes).
    pub accepted: u64,
    /// Total target for this family.
    pub target: u64,
    /// Draws consumed for this family so far.
    pub draws: u64,
}

/// One candidate sample produced by a draw.
struct Candidate {
    class: u8,
    x: Vec<f32>,
    y: Vec<u8>,
}

/// Immutable per-run context shared by the draw workers.
struct GenContext {
    degree: usize,
    seed: u64,
    split_id: u64,
    high: NodalBasis1D,
    low: NodalBasis1D,
    projection: Mat,
}

fn draw_key(seed: u64, split: u64, family: u64, draw: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&split.to_le_bytes());
    key[16..24].copy_from_slice(&family.to_le_bytes());
    key[24..32].copy_from_slice(&draw.to_le_bytes());
    key
}

/// Class condition of the non-smooth families: a contrast measure must
/// exceed a fraction of the magnitude, and the magnitude must clear the
/// constant floor. Families 1-3 are class 0 by construction.
fn class_condition(params: &FamilyParams, raw: &[f64]) -> bool {
    let max_abs = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    match params {
        FamilyParams::Linear { .. } | FamilyParams::Fourier { .. } | FamilyParams::Bumps { .. } => {
            false
        }
        FamilyParams::Sectors { u, .. } => {
            // Judged on the four drawn section values: the largest jump
            // between any two sections against the largest magnitude.
            let max_u = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);
            (max_u - min_u).abs() > JUMP_THRESHOLD * max_u && max_u > MAGNITUDE_FLOOR
        }
        FamilyParams::Ridge { a, .. } => *a > JUMP_THRESHOLD * max_abs && max_abs > MAGNITUDE_FLOOR,
        FamilyParams::Ramps { b1, b2, .. } => {
            b1.max(*b2) > JUMP_THRESHOLD * max_abs && max_abs > MAGNITUDE_FLOOR
        }
        FamilyParams::Oscillation { .. } => {
            let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
            (max_abs - min).abs() > JUMP_THRESHOLD_OSC * max_abs && max_abs > MAGNITUDE_FLOOR
        }
    }
}

/// Evaluate one draw: sample the function on every mesh element at the
/// double-degree nodes, classify, label, project to degree N, normalize.
fn make_draw_samples(ctx: &GenContext, family: u8, draw_idx: u64) -> Result<Vec<Candidate>, NnError> {
    let mut rng = ChaCha8Rng::from_seed(draw_key(ctx.seed, ctx.split_id, family as u64, draw_idx));
    let draw = draw_family(&mut rng, family, ctx.degree)?;
    let nh = ctx.high.nodes.len();
    let pxl = ctx.low.nodes.len();
    let width = 2.0 / draw.n_e as f64;
    let mut out = Vec::with_capacity(draw.n_e * draw.n_e);
    let mut raw = vec![0.0f64; nh * nh];
    for iy in 0..draw.n_e {
        let y_lo = -1.0 + iy as f64 * width;
        for ix in 0..draw.n_e {
            let x_lo = -1.0 + ix as f64 * width;
            for (kj, &eta) in ctx.high.nodes.iter().enumerate() {
                let yg = y_lo + 0.5 * (eta + 1.0) * width;
                for (ki, &xi) in ctx.high.nodes.iter().enumerate() {
                    let xg = x_lo + 0.5 * (xi + 1.0) * width;
                    raw[kj * nh + ki] = draw.params.eval(xg, yg);
                }
            }
            let condition = class_condition(&draw.params, &raw);
            // Labels are only attached when the contrast condition holds;
            // the sample is class 1 only if a crossing actually falls
            // inside the node-line range (discontinuous families always
            // live on the single-element mesh, so labeling happens in
            // element coordinates).
            let labels = if condition {
                label_element(&draw.params, &ctx.low.nodes)
            } else {
                vec![0u8; pxl * pxl]
            };
            let class = u8::from(condition && labels.iter().any(|&l| l == 1));
            let mut img = apply_tensor2(&ctx.projection, &raw);
            normalize(&mut img);
            out.push(Candidate {
                class,
                x: img.iter().map(|&v| v as f32).collect(),
                y: labels,
            });
        }
    }
    Ok(out)
}

/// Generate a corpus to the spec's quotas. `progress` is called after
/// every evaluated chunk of draws.
pub fn build_dataset(
    spec: &DatasetSpec,
    progress: impl FnMut(&GenProgress),
) -> Result<Dataset, NnError> {
    if spec.degree < 1 {
        return Err(NnError::config("dataset generation needs degree >= 1".to_string()));
    }
    if !(spec.scale.is_finite() && spec.scale >= 0.0) {
        return Err(NnError::config(format!(
            "dataset scale must be a non-negative number, got {}",
            spec.scale
        )));
    }
    let table = target_table(spec.node_family, spec.degree, spec.split);
    let targets: Vec<(u64, u64)> = table
        .iter()
        .map(|&(c0, c1)| {
            (
                (c0 as f64 * spec.scale).round() as u64,
                (c1 as f64 * spec.scale).round() as u64,
            )
        })
        .collect();

    build_with_targets(spec, &targets, progress)
}

/// Quota-driven generation against explicit per-family targets.
fn build_with_targets(
    spec: &DatasetSpec,
    targets: &[(u64, u64)],
    mut progress: impl FnMut(&GenProgress),
) -> Result<Dataset, NnError> {
    let high = NodalBasis1D::new(spec.node_family, 2 * spec.degree);
    let low = NodalBasis1D::new(spec.node_family, spec.degree);
    let projection = build_degree_projection(&high, &low);
    let ctx = GenContext {
        degree: spec.degree,
        seed: spec.seed,
        split_id: spec.split.id(),
        high,
        low,
        projection,
    };

    let px2 = (spec.degree + 1) * (spec.degree + 1);
    let total_target: u64 = targets.iter().map(|&(a, b)| a + b).sum();
    let mut ds = Dataset {
        degree: spec.degree as u32,
        node_family: spec.node_family,
        x: Vec::with_capacity(total_target as usize * px2),
        y: Vec::with_capacity(total_target as usize * px2),
        families: Vec::with_capacity(total_target as usize),
        classes: Vec::with_capacity(total_target as usize),
    };

    for family in 1..=7u8 {
        let (t0, t1) = targets[(family - 1) as usize];
        if t0 == 0 && t1 == 0 {
            continue;
        }
        if family <= 3 && t1 > 0 {
            return Err(NnError::config(format!(
                "family {family} is smooth everywhere and cannot produce class-1 samples \
                 (requested {t1})"
            )));
        }
        // Smooth families yield up to n_e^2 samples per draw, so they use
        // smaller chunks to limit quota overshoot.
        let chunk: u64 = if family <= 3 { 64 } else { 1024 };
        let cap = (10_000 * (t0 + t1)).max(1_000_000);
        let (mut a0, mut a1) = (0u64, 0u64);
        let mut next_draw = 0u64;
        while a0 < t0 || a1 < t1 {
            if next_draw >= cap {
                return Err(NnError::Training(format!(
                    "dataset generation for family {family} exhausted {next_draw} draws with \
                     quotas still open (class 0: {a0}/{t0}, class 1: {a1}/{t1}); the class \
                     conditions may be unsatisfiable at these settings"
                )));
            }
            let lo = next_draw;
            let hi = (lo + chunk).min(cap);
            next_draw = hi;
            let draw_ids: Vec<u64> = (lo..hi).collect();
            let chunks: Vec<Vec<Candidate>> = draw_ids
                .into_par_iter()
                .map(|draw_idx| make_draw_samples(&ctx, family, draw_idx))
                .collect::<Result<_, _>>()?;
            for cand in chunks.into_iter().flatten() {
                let (accepted, target) = if cand.class == 0 { (&mut a0, t0) } else { (&mut a1, t1) };
                if *accepted < target {
                    *accepted += 1;
                    ds.x.extend_from_slice(&cand.x);
                    ds.y.extend_from_slice(&cand.y);
                    ds.families.push(family);
                    ds.classes.push(cand.class);
                }
                if a0 >= t0 && a1 >= t1 {
                    break;
                }
            }
            progress(&GenProgress {
                family,
                accepted: a0 + a1,
                target: t0 + t1,
                draws: next_draw,
            });
        }
    }
    Ok(ds)
}

pub(crate) fn family_byte(f: NodeFamily) -> u8 {
    match f {
        NodeFamily::Gauss => 0,
        NodeFamily::Equispaced => 1,
    }
}

pub(crate) fn family_from_byte(b: u8, path: &Path) -> Result<NodeFamily, NnError> {
    match b {
        0 => Ok(NodeFamily::Gauss),
        1 => Ok(NodeFamily::Equispaced),
        other => Err(NnError::format(path, format!("unknown node-family byte {other}"))),
    }
}

/// Write a corpus to disk.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<(), NnError> {
    let file = std::fs::File::create(path).map_err(|e| NnError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let counts = ds.counts();
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| NnError::io(path, e));
    write(DATASET_MAGIC)?;
    write(&DATASET_VERSION.to_le_bytes())?;
    write(&ds.degree.to_le_bytes())?;
    write(&[family_byte(ds.node_family), 0, 0, 0])?;
    write(&(ds.len() as u64).to_le_bytes())?;
    for &(c0, c1) in &counts.per_family {
        write(&c0.to_le_bytes())?;
        write(&c1.to_le_bytes())?;
    }
    let p = ds.px() * ds.px();
    for i in 0..ds.len() {
        write(&[ds.families[i], ds.classes[i]])?;
        let xs = &ds.x[i * p..(i + 1) * p];
        for &v in xs {
            write(&v.to_le_bytes())?;
        }
        write(&ds.y[i * p..(i + 1) * p])?;
    }
    w.flush().map_err(|e| NnError::io(path, e))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path, what: &str) -> Result<(), NnError> {
    r.read_exact(buf).map_err(|_| {
        NnError::format(path, format!("file ends inside {what} (truncated or not a corpus file)"))
    })
}

/// Read a corpus from disk, validating header and payload consistency.
pub fn load_dataset(path: &Path) -> Result<Dataset, NnError> {
    let file = std::fs::File::open(path).map_err(|e| NnError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, path, "the magic header")?;
    if &magic != DATASET_MAGIC {
        return Err(NnError::format(path, "wrong magic bytes; not a sample-corpus file"));
    }
    let mut u32buf = [0u8; 4];
    read_exact(&mut r, &mut u32buf, path, "the version field")?;
    let version = u32::from_le_bytes(u32buf);
    if version != DATASET_VERSION {
        return Err(NnError::format(
            path,
            format!("unsupported corpus version {version} (expected {DATASET_VERSION})"),
        ));
    }
    read_exact(&mut r, &mut u32buf, path, "the degree field")?;
    let degree = u32::from_le_bytes(u32buf);
    if degree == 0 || degree > 64 {
        return Err(NnError::format(path, format!("implausible degree {degree}")));
    }
    let mut fam = [0u8; 4];
    read_exact(&mut r, &mut fam, path, "the node-family field")?;
    let node_family = family_from_byte(fam[0], path)?;
    let mut u64buf = [0u8; 8];
    read_exact(&mut r, &mut u64buf, path, "the sample count")?;
    let sample_count = u64::from_le_bytes(u64buf);
    let mut header_counts = ClassCounts::default();
    for f in 0..7 {
        read_exact(&mut r, &mut u64buf, path, "the per-family counts")?;
        header_counts.per_family[f].0 = u64::from_le_bytes(u64buf);
        read_exact(&mut r, &mut u64buf, path, "the per-family counts")?;
        header_counts.per_family[f].1 = u64::from_le_bytes(u64buf);
    }
    if header_counts.total() != sample_count {
        return Err(NnError::format(
            path,
            format!(
                "header total {} disagrees with per-family counts summing to {}",
                sample_count,
                header_counts.total()
            ),
        ));
    }

    let p = (degree as usize + 1) * (degree as usize + 1);
    let n = sample_count as usize;
    let mut ds = Dataset {
        degree,
        node_family,
        x: Vec::with_capacity(n * p),
        y: Vec::with_capacity(n * p),
        families: Vec::with_capacity(n),
        classes: Vec::with_capacity(n),
    };
    let mut xbuf = vec![0u8; 4 * p];
    let mut ybuf = vec![0u8; p];
    let mut head = [0u8; 2];
    for i in 0..n {
        read_exact(&mut r, &mut head, path, &format!("sample {i}"))?;
        let (family, class) = (head[0], head[1]);
        if !(1..=7).contains(&family) {
            return Err(NnError::format(path, format!("sample {i} has family id {family}")));
        }
        if class > 1 {
            return Err(NnError::format(path, format!("sample {i} has class {class}")));
        }
        read_exact(&mut r, &mut xbuf, path, &format!("sample {i} image"))?;
        for c in xbuf.chunks_exact(4) {
            ds.x.push(f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        }
        read_exact(&mut r, &mut ybuf, path, &format!("sample {i} edge map"))?;
        if let Some(bad) = ybuf.iter().find(|&&b| b > 1) {
            return Err(NnError::format(
                path,
                format!("sample {i} edge map holds non-binary value {bad}"),
            ));
        }
        ds.y.extend_from_slice(&ybuf);
        ds.families.push(family);
        ds.classes.push(class);
    }
    let mut trailer = [0u8; 1];
    if r.read(&mut trailer).map_err(|e| NnError::io(path, e))? != 0 {
        return Err(NnError::format(path, "trailing bytes after the last sample"));
    }
    if ds.counts() != header_counts {
        return Err(NnError::format(path, "per-family counts disagree with the samples"));
    }
    Ok(ds)
}
