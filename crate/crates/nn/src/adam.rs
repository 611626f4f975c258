//! Adam optimizer with bias correction, holding one moment pair per
//! parameter tensor.

use crate::error::NnError;
use crate::real::{real, Real};

/// Adam state over a fixed list of parameter tensors. The step counter is
/// shared: call [`Adam::begin_step`] once per optimization step, then
/// [`Adam::update`] for each tensor.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    /// Number of completed `begin_step` calls; bias correction uses it.
    pub step: u64,
    /// First-moment accumulators, one Vec per parameter tensor.
    pub m: Vec<Vec<S>>,
    /// Second-moment accumulators, shaped like `m`.
    pub v: Vec<Vec<S>>,
}

impl<S: Real> Adam<S> {
    /// Fresh optimizer for tensors of the given lengths, with the standard
    /// coefficients beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(tensor_lens: &[usize]) -> Self {
        Self {
            beta1: real(0.9),
            beta2: real(0.999),
            eps: real(1e-8),
            step: 0,
            m: tensor_lens.iter().map(|&l| vec![S::zero(); l]).collect(),
            v: tensor_lens.iter().map(|&l| vec![S::zero(); l]).collect(),
        }
    }

    /// Advance the shared step counter. Must be called before the first
    /// `update` of each optimization step.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Apply one Adam update to tensor `idx` in place.
    pub fn update(
        &mut self,
        idx: usize,
        params: &mut [S],
        grads: &[S],
        lr: S,
    ) -> Result<(), NnError> {
        if self.step == 0 {
            return Err(NnError::config("Adam::begin_step must be called before update"));
        }
        let m = self.m.get_mut(idx).ok_or_else(|| {
            NnError::config(format!("Adam tensor index {idx} out of range"))
        })?;
        let v = &mut self.v[idx];
        if params.len() != m.len() || grads.len() != m.len() {
            return Err(NnError::config(format!(
                "Adam tensor {idx}: parameter/gradient length {} / {} does not match state {}",
                params.len(),
                grads.len(),
                m.len()
            )));
        }
        let (b1, b2) = (self.beta1, self.beta2);
        let one = S::one();
        // 1 - beta^t for the bias correction; exponent fits i32 comfortably
        let bc1 = one - b1.powi(self.step.min(i32::MAX as u64) as i32);
        let bc2 = one - b2.powi(self.step.min(i32::MAX as u64) as i32);
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = b1 * m[i] + (one - b1) * g;
            v[i] = b2 * v[i] + (one - b2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut adam = Adam::<f64>::new(&[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let orig = p.clone();
        for _ in 0..10 {
            adam.begin_step();
            adam.update(0, &mut p, &[0.0, 0.0, 0.0], 0.1).unwrap();
        }
        assert_eq!(p, orig);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut adam = Adam::<f64>::new(&[2]);
        let mut p = vec![0.0, 0.0];
        adam.begin_step();
        adam.update(0, &mut p, &[0.3, -2.0], 0.01).unwrap();
        // m_hat = g, v_hat = g^2 -> delta = lr * g/(|g| + eps) ~ lr * sign(g)
        assert!((p[0] - (-0.01)).abs() < 1e-6);
        assert!((p[1] - 0.01).abs() < 1e-6);
    }

    #[test]
    fn trajectory_matches_scalar_oracle() {
        // Independent scalar Adam written longhand.
        let (b1, b2, eps, lr) = (0.9f64, 0.999, 1e-8, 0.05);
        let mut theta = 1.5f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let grad_of = |x: f64| 2.0 * (x - 0.3); // d/dx (x-0.3)^2
        let mut adam = Adam::<f64>::new(&[1]);
        let mut p = vec![1.5];
        for t in 1..=200 {
            let g = grad_of(theta);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            theta -= lr * mh / (vh.sqrt() + eps);

            let g_vec = [grad_of(p[0])];
            adam.begin_step();
            adam.update(0, &mut p, &g_vec, lr).unwrap();
            assert!((p[0] - theta).abs() < 1e-10, "step {t}: {} vs {theta}", p[0]);
        }
        // and it actually optimized the quadratic
        assert!((p[0] - 0.3).abs() < 0.05);
    }

    #[test]
    fn update_without_begin_step_is_rejected() {
        let mut adam = Adam::<f32>::new(&[1]);
        let mut p = vec![0.0f32];
        assert!(adam.update(0, &mut p, &[1.0], 0.1).is_err());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut adam = Adam::<f32>::new(&[2]);
        adam.begin_step();
        let mut p = vec![0.0f32; 3];
        assert!(adam.update(0, &mut p, &[1.0; 3], 0.1).is_err());
    }
}
