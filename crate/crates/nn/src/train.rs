//! Mini-batch training loop for the edge-detection network.
//!
//! Adam over the deep-supervision loss, a halving learning-rate schedule,
//! a deterministic per-epoch shuffle, and per-epoch validation (mean loss
//! plus F1 of the thresholded average map). Everything runs serially so a
//! fixed seed reproduces training bit for bit.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adam::Adam;
use crate::datagen::Dataset;
use crate::error::NnError;
use crate::hed::HedNetwork;
use crate::loss::{deep_supervision_loss, WeightConvention};
use crate::tensor::Tensor4;

/// Threshold on the averaged sigmoid map above which a pixel counts as an
/// edge prediction.
pub const EDGE_THRESHOLD: f32 = 0.5;

/// Knobs for [`train`]. The defaults are the reference training setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Samples per mini-batch.
    pub batch: usize,
    /// Passes over the training set.
    pub epochs: usize,
    /// Learning rate during the first schedule period.
    pub lr0: f64,
    /// Period, in epochs, after which the learning rate halves.
    pub halve_every: usize,
    /// Weight multiplier of the majority class in the loss.
    pub lambda: f64,
    /// Seed for the per-epoch shuffle.
    pub seed: u64,
    /// Class-weighting convention of the loss.
    pub convention: WeightConvention,
    /// First epoch to run (1-based); raise it when resuming from a
    /// checkpoint so the shuffle order and learning rate line up with an
    /// uninterrupted run.
    pub start_epoch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch: 500,
            epochs: 120,
            lr0: 0.01,
            halve_every: 15,
            lambda: 1.1,
            seed: 0,
            convention: WeightConvention::EdgeWeighted,
            start_epoch: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), NnError> {
        if self.batch == 0 {
            return Err(NnError::config("batch size must be at least 1"));
        }
        if self.halve_every == 0 {
            return Err(NnError::config("halve_every must be at least 1"));
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return Err(NnError::config(format!(
                "initial learning rate must be finite and positive, got {}",
                self.lr0
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(NnError::config(format!(
                "loss weight lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if self.start_epoch == 0 {
            return Err(NnError::config("start_epoch is 1-based and must be at least 1"));
        }
        Ok(())
    }
}

/// Learning rate for a 1-based epoch: `lr0 * 0.5^((epoch-1) / halve_every)`
/// with integer division, so epochs 1..=halve_every share `lr0`.
pub fn learning_rate(cfg: &TrainConfig, epoch: usize) -> f64 {
    let period = (epoch.max(1) - 1) / cfg.halve_every;
    cfg.lr0 * 0.5f64.powi(period as i32)
}

/// Per-epoch training summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch index.
    pub epoch: usize,
    /// Learning rate used during this epoch.
    pub lr: f64,
    /// Mean training loss over the epoch (sample-weighted).
    pub train_loss: f64,
    /// Mean validation loss after the epoch.
    pub val_loss: f64,
    /// Validation F1 of the thresholded average map after the epoch.
    pub val_f1: f64,
}

/// Held-out evaluation summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    /// Mean deep-supervision loss (sample-weighted over batches).
    pub loss: f64,
    /// F1 score of the thresholded average map; 1.0 when neither
    /// predictions nor labels contain a positive pixel.
    pub f1: f64,
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

/// Seed for the index shuffle of a 1-based epoch.
fn shuffle_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Assemble input and label tensors for the samples at `idx`.
fn batch_tensors(set: &Dataset, idx: &[usize]) -> (Tensor4<f32>, Tensor4<f32>) {
    let px = set.px();
    let plane = px * px;
    let mut x = Vec::with_capacity(idx.len() * plane);
    let mut y = Vec::with_capacity(idx.len() * plane);
    for &i in idx {
        x.extend_from_slice(set.sample_x(i));
        y.extend(set.sample_y(i).iter().map(|&v| v as f32));
    }
    let x = Tensor4::from_vec(idx.len(), 1, px, px, x).expect("batch image shape");
    let y = Tensor4::from_vec(idx.len(), 1, px, px, y).expect("batch label shape");
    (x, y)
}

fn check_compatible(net: &HedNetwork<f32>, set: &Dataset, role: &str) -> Result<(), NnError> {
    if set.is_empty() {
        return Err(NnError::config(format!("{role} set is empty")));
    }
    if set.degree as usize != net.degree {
        return Err(NnError::config(format!(
            "{role} set degree {} does not match network degree {}",
            set.degree, net.degree
        )));
    }
    if set.node_family != net.node_family {
        return Err(NnError::config(format!(
            "{role} set node family {:?} does not match network family {:?}",
            set.node_family, net.node_family
        )));
    }
    Ok(())
}

/// Evaluate `net` on `set` without updating anything: mean loss under the
/// running batch-norm statistics plus pixel-level F1 of the thresholded
/// average map.
pub fn evaluate(
    net: &HedNetwork<f32>,
    set: &Dataset,
    batch: usize,
    lambda: f64,
    convention: WeightConvention,
) -> Result<EvalStats, NnError> {
    if batch == 0 {
        return Err(NnError::config("batch size must be at least 1"));
    }
    check_compatible(net, set, "evaluation")?;
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut loss_sum = 0.0f64;
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for chunk in idx.chunks(batch) {
        let (x, y) = batch_tensors(set, chunk);
        let out = net.forward_infer(&x)?;
        let maps: Vec<&Tensor4<f32>> = out.pre_sigmoid.iter().collect();
        let loss = deep_supervision_loss(&maps, &y, lambda, convention)?;
        loss_sum += loss.value * chunk.len() as f64;
        for (&p, &t) in out.average.data.iter().zip(&y.data) {
            let pred = p >= EDGE_THRESHOLD;
            let truth = t > 0.5;
            match (pred, truth) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let loss = loss_sum / set.len() as f64;
    if !loss.is_finite() {
        return Err(NnError::Training(format!(
            "evaluation loss is not finite: {loss}"
        )));
    }
    let denom = 2 * tp + fp + fn_;
    let f1 = if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    };
    Ok(EvalStats {
        loss,
        f1,
        true_pos: tp,
        false_pos: fp,
        false_neg: fn_,
    })
}

/// Train `net` on `train_set`, evaluating on `val_set` after every epoch.
///
/// `adam` carries the optimizer state so a resumed run continues where it
/// stopped. `progress` is invoked once per completed epoch with the stats
/// that are also returned.
pub fn train(
    net: &mut HedNetwork<f32>,
    adam: &mut Adam<f32>,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<Vec<EpochStats>, NnError> {
    cfg.validate()?;
    check_compatible(net, train_set, "training")?;
    check_compatible(net, val_set, "validation")?;
    if adam.m.len() != net.param_lens().len() {
        return Err(NnError::config(format!(
            "optimizer tracks {} tensors but the network has {}",
            adam.m.len(),
            net.param_lens().len()
        )));
    }

    let mut history = Vec::with_capacity(cfg.epochs.saturating_sub(cfg.start_epoch - 1));
    for epoch in cfg.start_epoch..=cfg.epochs {
        let lr = learning_rate(cfg, epoch);
        // The visit order is a pure function of (seed, epoch) so a resumed
        // run shuffles exactly like the uninterrupted one.
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed(cfg.seed, epoch));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0f64;
        for (batch_idx, chunk) in order.chunks(cfg.batch).enumerate() {
            let (x, y) = batch_tensors(train_set, chunk);
            let pass = net.forward_train(&x)?;
            let loss =
                deep_supervision_loss(&pass.loss_inputs(), &y, cfg.lambda, cfg.convention)?;
            if !loss.value.is_finite() {
                return Err(NnError::Training(format!(
                    "loss became non-finite ({}) at epoch {epoch}, batch {batch_idx} \
                     (lr {lr}, batch size {})",
                    loss.value,
                    chunk.len()
                )));
            }
            let grads = net.backward(&x, &pass, &loss.grads)?;
            adam.begin_step();
            let tensors = grads.tensors();
            for (idx, (_, param)) in net.params_mut().into_iter().enumerate() {
                adam.update(idx, param, tensors[idx], lr as f32)?;
            }
            loss_sum += loss.value * chunk.len() as f64;
        }

        let val = evaluate(net, val_set, cfg.batch, cfg.lambda, cfg.convention)?;
        let stats = EpochStats {
            epoch,
            lr,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss: val.loss,
            val_f1: val.f1,
        };
        progress(&stats);
        history.push(stats);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{build_dataset, DatasetSpec, Split};
    use crate::hed::SideKernel;
    use shocknet_core::basis::NodeFamily;

    fn cfg(batch: usize, epochs: usize) -> TrainConfig {
        TrainConfig {
            batch,
            epochs,
            ..TrainConfig::default()
        }
    }

    /// A dataset holding `copies` repetitions of one degree-3 sample with a
    /// vertical edge between the middle columns.
    fn single_sample_set(copies: usize) -> Dataset {
        let px = 4;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..copies {
            for _jy in 0..px {
                for ix in 0..px {
                    x.push(if ix < 2 { 0.1 } else { 0.9 });
                    y.push(u8::from(ix == 1 || ix == 2));
                }
            }
        }
        Dataset {
            degree: 3,
            node_family: NodeFamily::Gauss,
            x,
            y,
            families: vec![4; copies],
            classes: vec![1; copies],
        }
    }

    #[test]
    fn learning_rate_halves_every_period() {
        let c = TrainConfig::default();
        assert_eq!(learning_rate(&c, 1), 0.01);
        assert_eq!(learning_rate(&c, 15), 0.01);
        assert_eq!(learning_rate(&c, 16), 0.005);
        assert_eq!(learning_rate(&c, 30), 0.005);
        assert_eq!(learning_rate(&c, 31), 0.0025);
        assert_eq!(learning_rate(&c, 120), 0.01 * 0.5f64.powi(7));
    }

    #[test]
    fn overfits_a_single_repeated_sample() {
        let set = single_sample_set(8);
        let mut net =
            HedNetwork::<f32>::build(3, NodeFamily::Gauss, SideKernel::K1, 11).unwrap();
        let mut adam = Adam::new(&net.param_lens());
        let c = TrainConfig {
            batch: 8,
            epochs: 80,
            halve_every: 10_000,
            ..TrainConfig::default()
        };
        let history = train(&mut net, &mut adam, &set, &set, &c, |_| {}).unwrap();
        let last = history.last().unwrap();
        assert!(
            last.train_loss < 1e-2,
            "failed to overfit: final loss {}",
            last.train_loss
        );
        assert_eq!(last.val_f1, 1.0, "thresholded map should match labels");
    }

    #[test]
    fn validation_loss_decreases_on_generated_data() {
        let spec = DatasetSpec {
            degree: 4,
            node_family: NodeFamily::Gauss,
            split: Split::Train,
            scale: 0.002,
            seed: 5,
        };
        let train_set = build_dataset(&spec, |_| {}).unwrap();
        let val_set = build_dataset(
            &DatasetSpec {
                split: Split::Val,
                scale: 0.02,
                ..spec
            },
            |_| {},
        )
        .unwrap();
        assert!(train_set.len() > 100, "train set has {}", train_set.len());
        assert!(val_set.len() > 100, "val set has {}", val_set.len());

        let mut net =
            HedNetwork::<f32>::build(4, NodeFamily::Gauss, SideKernel::K1, 3).unwrap();
        let mut adam = Adam::new(&net.param_lens());
        let history = train(
            &mut net,
            &mut adam,
            &train_set,
            &val_set,
            &cfg(50, 6),
            |_| {},
        )
        .unwrap();
        assert_eq!(history.len(), 6);
        let first = history.first().unwrap();
        let last = history.last().unwrap();
        assert!(
            last.val_loss < first.val_loss,
            "validation loss did not decrease: {} -> {}",
            first.val_loss,
            last.val_loss
        );
        for s in &history {
            assert!(s.train_loss.is_finite() && s.val_loss.is_finite());
            assert!((0.0..=1.0).contains(&s.val_f1));
        }
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let set = single_sample_set(6);
        let run = || {
            let mut net =
                HedNetwork::<f32>::build(3, NodeFamily::Gauss, SideKernel::K1, 2).unwrap();
            let mut adam = Adam::new(&net.param_lens());
            let c = TrainConfig {
                batch: 4,
                epochs: 3,
                ..TrainConfig::default()
            };
            let history = train(&mut net, &mut adam, &set, &set, &c, |_| {}).unwrap();
            let params: Vec<Vec<u32>> = net
                .params()
                .iter()
                .map(|(_, p)| p.iter().map(|v| v.to_bits()).collect())
                .collect();
            (params, history)
        };
        let (p1, h1) = run();
        let (p2, h2) = run();
        assert_eq!(p1, p2, "parameter bits diverged between identical runs");
        for (a, b) in h1.iter().zip(&h2) {
            assert_eq!(a.train_loss.to_bits(), b.train_loss.to_bits());
            assert_eq!(a.val_loss.to_bits(), b.val_loss.to_bits());
        }
    }

    #[test]
    fn mismatched_dataset_is_rejected() {
        let set = single_sample_set(2);
        let mut net =
            HedNetwork::<f32>::build(5, NodeFamily::Gauss, SideKernel::K1, 0).unwrap();
        let mut adam = Adam::new(&net.param_lens());
        let err = train(&mut net, &mut adam, &set, &set, &cfg(2, 1), |_| {}).unwrap_err();
        assert!(err.to_string().contains("degree"), "{err}");

        let empty = Dataset {
            degree: 5,
            node_family: NodeFamily::Gauss,
            x: vec![],
            y: vec![],
            families: vec![],
            classes: vec![],
        };
        let err = train(&mut net, &mut adam, &empty, &empty, &cfg(2, 1), |_| {}).unwrap_err();
        assert!(err.to_string().contains("empty"), "{err}");

        let err = train(&mut net, &mut adam, &set, &set, &cfg(0, 1), |_| {}).unwrap_err();
        assert!(err.to_string().contains("batch"), "{err}");
    }

    #[test]
    fn progress_reports_every_epoch() {
        let set = single_sample_set(4);
        let mut net =
            HedNetwork::<f32>::build(3, NodeFamily::Gauss, SideKernel::K1, 9).unwrap();
        let mut adam = Adam::new(&net.param_lens());
        let mut seen = Vec::new();
        let history = train(&mut net, &mut adam, &set, &set, &cfg(4, 3), |s| {
            seen.push(s.epoch)
        })
        .unwrap();
        assert_eq!(seen, vec![1, 2, 3]);
        assert_eq!(history.len(), 3);
    }
}
