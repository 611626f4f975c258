//! Per-channel batch normalization with running statistics.
//!
//! Train mode normalizes by the biased batch statistics over (batch, h, w)
//! and blends them into the running estimates; infer mode normalizes by the
//! running estimates. The backward pass uses the standard closed form
//! derived from the normalization graph.

use crate::error::NnError;
use crate::real::{real, Real};
use crate::tensor::Tensor4;

/// Batch normalization layer state: trainable scale/shift and running
/// statistics updated in train mode.
#[derive(Debug, Clone)]
pub struct BatchNormLayer<S> {
    pub channels: usize,
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
    /// Blend factor for the running statistics: new = (1-m)*old + m*batch.
    pub momentum: S,
    /// Variance floor added under the square root.
    pub eps: S,
}

/// Intermediate values needed by the backward pass: the normalized input
/// and the per-channel inverse standard deviation.
#[derive(Debug, Clone)]
pub struct BnCache<S> {
    pub x_hat: Tensor4<S>,
    pub inv_std: Vec<S>,
    pub batch_mean: Vec<S>,
    pub batch_var: Vec<S>,
}

impl<S: Real> BatchNormLayer<S> {
    /// Fresh layer: gamma 1, beta 0, running mean 0, running variance 1,
    /// momentum 0.1, epsilon 1e-5.
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            gamma: vec![S::one(); channels],
            beta: vec![S::zero(); channels],
            running_mean: vec![S::zero(); channels],
            running_var: vec![S::one(); channels],
            momentum: real(0.1),
            eps: real(1e-5),
        }
    }

    fn check_input(&self, x: &Tensor4<S>) -> Result<(), NnError> {
        if x.c != self.channels {
            return Err(NnError::config(format!(
                "batch norm expects {} channels, got {}",
                self.channels, x.c
            )));
        }
        Ok(())
    }

    /// Train-mode forward: normalize by batch statistics. Does not touch
    /// the running statistics — call [`Self::update_running`] with the
    /// returned cache to blend them in (kept separate so that repeated
    /// forward evaluations, e.g. during finite-difference checks, are pure).
    pub fn forward_train(&self, x: &Tensor4<S>) -> Result<(Tensor4<S>, BnCache<S>), NnError> {
        self.check_input(x)?;
        if x.n < 2 {
            return Err(NnError::config(format!(
                "batch norm in train mode needs a batch of at least 2, got {}",
                x.n
            )));
        }
        let count = real::<S>((x.n * x.plane()) as f64);
        let mut mean = vec![S::zero(); self.channels];
        let mut var = vec![S::zero(); self.channels];
        for c in 0..self.channels {
            let mut sum = S::zero();
            for n in 0..x.n {
                for &v in x.plane_slice(n, c) {
                    sum = sum + v;
                }
            }
            let m = sum / count;
            let mut sq = S::zero();
            for n in 0..x.n {
                for &v in x.plane_slice(n, c) {
                    let d = v - m;
                    sq = sq + d * d;
                }
            }
            mean[c] = m;
            // biased (population) variance, the convention for batch norm
            var[c] = sq / count;
        }
        let inv_std: Vec<S> = var.iter().map(|&v| S::one() / (v + self.eps).sqrt()).collect();
        let mut x_hat = Tensor4::zeros(x.n, x.c, x.h, x.w);
        let mut out = Tensor4::zeros(x.n, x.c, x.h, x.w);
        for n in 0..x.n {
            for c in 0..self.channels {
                let (m, istd) = (mean[c], inv_std[c]);
                let (g, b) = (self.gamma[c], self.beta[c]);
                let xp = x.plane_slice(n, c);
                let hp = x_hat.plane_slice_mut(n, c);
                for (h, &v) in hp.iter_mut().zip(xp) {
                    *h = (v - m) * istd;
                }
                let op = out.plane_slice_mut(n, c);
                let hp = x_hat.plane_slice(n, c);
                for (o, &h) in op.iter_mut().zip(hp) {
                    *o = g * h + b;
                }
            }
        }
        Ok((out, BnCache { x_hat, inv_std, batch_mean: mean, batch_var: var }))
    }

    /// Blend the batch statistics of a completed train-mode forward pass
    /// into the running estimates.
    pub fn update_running(&mut self, cache: &BnCache<S>) {
        let m = self.momentum;
        let om = S::one() - m;
        for c in 0..self.channels {
            self.running_mean[c] = om * self.running_mean[c] + m * cache.batch_mean[c];
            self.running_var[c] = om * self.running_var[c] + m * cache.batch_var[c];
        }
    }

    /// Inference forward: normalize by the running statistics.
    pub fn forward_infer(&self, x: &Tensor4<S>) -> Result<Tensor4<S>, NnError> {
        self.check_input(x)?;
        let mut out = Tensor4::zeros(x.n, x.c, x.h, x.w);
        for n in 0..x.n {
            for c in 0..self.channels {
                let istd = S::one() / (self.running_var[c] + self.eps).sqrt();
                let (m, g, b) = (self.running_mean[c], self.gamma[c], self.beta[c]);
                let xp = x.plane_slice(n, c);
                let op = out.plane_slice_mut(n, c);
                for (o, &v) in op.iter_mut().zip(xp) {
                    *o = g * (v - m) * istd + b;
                }
            }
        }
        Ok(out)
    }

    /// Backward through the train-mode normalization. Returns
    /// (d input, d gamma, d beta).
    pub fn backward(
        &self,
        cache: &BnCache<S>,
        grad_out: &Tensor4<S>,
    ) -> Result<(Tensor4<S>, Vec<S>, Vec<S>), NnError> {
        grad_out.check_same_shape(&cache.x_hat, "batch norm backward")?;
        let x_hat = &cache.x_hat;
        let count = real::<S>((x_hat.n * x_hat.plane()) as f64);
        let mut grad_gamma = vec![S::zero(); self.channels];
        let mut grad_beta = vec![S::zero(); self.channels];
        let mut grad_x = Tensor4::zeros(x_hat.n, x_hat.c, x_hat.h, x_hat.w);
        for c in 0..self.channels {
            // channel-wide reductions of dL/dy and dL/dy * x_hat
            let mut sum_g = S::zero();
            let mut sum_gh = S::zero();
            for n in 0..x_hat.n {
                let gp = grad_out.plane_slice(n, c);
                let hp = x_hat.plane_slice(n, c);
                for (&g, &h) in gp.iter().zip(hp) {
                    sum_g = sum_g + g;
                    sum_gh = sum_gh + g * h;
                }
            }
            grad_beta[c] = sum_g;
            grad_gamma[c] = sum_gh;
            // dL/dx = gamma * inv_std / M * (M*dy - sum(dy) - x_hat * sum(dy*x_hat))
            let scale = self.gamma[c] * cache.inv_std[c] / count;
            for n in 0..x_hat.n {
                let gp = grad_out.plane_slice(n, c);
                let hp = x_hat.plane_slice(n, c);
                let op = grad_x.plane_slice_mut(n, c);
                for i in 0..gp.len() {
                    op[i] = scale * (count * gp[i] - sum_g - hp[i] * sum_gh);
                }
            }
        }
        Ok((grad_x, grad_gamma, grad_beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, n: usize, c: usize, h: usize, w: usize) -> Tensor4<f64> {
        let data = (0..n * c * h * w).map(|_| rng.gen_range(-2.0..2.0)).collect();
        Tensor4::from_vec(n, c, h, w, data).unwrap()
    }

    #[test]
    fn train_mode_normalizes_to_zero_mean_unit_variance() {
        let bn = BatchNormLayer::<f64>::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_tensor(&mut rng, 4, 3, 5, 5);
        let (y, _) = bn.forward_train(&x).unwrap();
        let count = (4 * 25) as f64;
        for c in 0..3 {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for n in 0..4 {
                for &v in y.plane_slice(n, c) {
                    sum += v;
                    sq += v * v;
                }
            }
            let mean = sum / count;
            let var = sq / count - mean * mean;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4, "variance {var} should be 1 up to eps");
        }
    }

    #[test]
    fn infer_matches_train_when_running_stats_equal_batch_stats() {
        let mut bn = BatchNormLayer::<f64>::new(2);
        bn.gamma = vec![1.3, 0.4];
        bn.beta = vec![-0.2, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_tensor(&mut rng, 3, 2, 4, 4);
        let (y_train, cache) = bn.forward_train(&x).unwrap();
        bn.running_mean = cache.batch_mean.clone();
        bn.running_var = cache.batch_var.clone();
        let y_infer = bn.forward_infer(&x).unwrap();
        for (a, b) in y_train.data.iter().zip(&y_infer.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_channel_collapses_to_beta() {
        let mut bn = BatchNormLayer::<f64>::new(1);
        bn.beta = vec![0.77];
        let x = Tensor4::from_vec(2, 1, 2, 2, vec![3.5; 8]).unwrap();
        let (y, _) = bn.forward_train(&x).unwrap();
        for &v in &y.data {
            assert!((v - 0.77).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_of_one_is_rejected_in_train_mode() {
        let bn = BatchNormLayer::<f64>::new(1);
        let x = Tensor4::zeros(1, 1, 3, 3);
        let err = bn.forward_train(&x).unwrap_err();
        assert!(err.to_string().contains("at least 2"));
    }

    #[test]
    fn running_stats_blend_with_momentum() {
        let mut bn = BatchNormLayer::<f64>::new(1);
        let x = Tensor4::from_vec(2, 1, 1, 2, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let (_, cache) = bn.forward_train(&x).unwrap();
        assert!((cache.batch_mean[0] - 4.0).abs() < 1e-14);
        assert!((cache.batch_var[0] - 5.0).abs() < 1e-14); // E[(x-4)^2] = (9+1+1+9)/4
        bn.update_running(&cache);
        assert!((bn.running_mean[0] - 0.4).abs() < 1e-14); // 0.9*0 + 0.1*4
        assert!((bn.running_var[0] - (0.9 + 0.5)).abs() < 1e-14); // 0.9*1 + 0.1*5
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut bn = BatchNormLayer::<f64>::new(2);
        bn.gamma = vec![1.2, -0.7];
        bn.beta = vec![0.3, 0.9];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = random_tensor(&mut rng, 3, 2, 2, 3);
        let probe = random_tensor(&mut rng, 3, 2, 2, 3);
        let loss = |bn: &BatchNormLayer<f64>, x: &Tensor4<f64>| -> f64 {
            let (y, _) = bn.forward_train(x).unwrap();
            y.data.iter().zip(&probe.data).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = bn.forward_train(&x).unwrap();
        let (gx, gg, gb) = bn.backward(&cache, &probe).unwrap();
        let h = 1e-6;
        for i in 0..x.numel() {
            let mut xp = x.clone();
            xp.data[i] += h;
            let mut xm = x.clone();
            xm.data[i] -= h;
            let fd = (loss(&bn, &xp) - loss(&bn, &xm)) / (2.0 * h);
            assert!((fd - gx.data[i]).abs() < 1e-7, "input grad {i}: {fd} vs {}", gx.data[i]);
        }
        for c in 0..2 {
            let mut bp = bn.clone();
            bp.gamma[c] += h;
            let mut bm = bn.clone();
            bm.gamma[c] -= h;
            let fd = (loss(&bp, &x) - loss(&bm, &x)) / (2.0 * h);
            assert!((fd - gg[c]).abs() < 1e-7);
            let mut bp = bn.clone();
            bp.beta[c] += h;
            let mut bm = bn.clone();
            bm.beta[c] -= h;
            let fd = (loss(&bp, &x) - loss(&bm, &x)) / (2.0 * h);
            assert!((fd - gb[c]).abs() < 1e-7);
        }
    }
}
