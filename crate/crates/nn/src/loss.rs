//! Deep-supervision weighted cross-entropy over a set of edge-map
//! predictions, with the exact analytic gradient with respect to the
//! pre-sigmoid activations.
//!
//! For L prediction maps, batch size m, S_Y pixels per map, binary labels
//! Y and probabilities p = sigmoid(z):
//!
//! ```text
//! C = -(1/m) sum_batch sum_l (1/S_Y) sum_pixels [ wp*Y*ln(p) + wn*(1-Y)*ln(1-p) ]
//! ```
//!
//! where the pixel weights depend on the mini-batch edge fraction
//! Lambda = (#labels equal to 1) / (#labels) and the chosen
//! [`WeightConvention`]. Probabilities are clipped to [1e-7, 1-1e-7]
//! before the logarithms; the returned gradient is the exact derivative of
//! the unclipped loss (it is bounded, so no clipping is needed — the two
//! only differ once |z| exceeds ~16, far outside the training regime).

use crate::act::sigmoid_scalar;
use crate::error::NnError;
use crate::real::{real, Real};
use crate::tensor::Tensor4;

/// Probability clip applied before the logarithms.
pub const PROB_CLIP: f64 = 1e-7;

/// How the per-pixel weights are assigned from the edge fraction Lambda.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightConvention {
    /// Positive (edge) term weighted by Lambda, negative term by
    /// lambda*(1-Lambda). The default.
    EdgeWeighted,
    /// The swap of the above: positive term lambda*(1-Lambda), negative
    /// term Lambda — the class-balancing used by classic deep-supervision
    /// edge detectors, provided for experimentation.
    ClassBalanced,
}

impl Default for WeightConvention {
    fn default() -> Self {
        WeightConvention::EdgeWeighted
    }
}

/// Loss value together with the gradients for each prediction map.
#[derive(Debug, Clone)]
pub struct LossOutput<S> {
    /// Scalar loss (accumulated in f64 regardless of the working scalar).
    pub value: f64,
    /// dC/dz_l for every pre-sigmoid input map, in input order.
    pub grads: Vec<Tensor4<S>>,
    /// The mini-batch edge fraction Lambda that was used for weighting.
    pub edge_fraction: f64,
}

/// Evaluate the deep-supervision loss and its gradients.
///
/// `pre_sigmoid` holds the L pre-sigmoid prediction maps, each shaped like
/// `labels` (batch, 1, h, w); `labels` entries must be exactly 0 or 1.
pub fn deep_supervision_loss<S: Real>(
    pre_sigmoid: &[&Tensor4<S>],
    labels: &Tensor4<S>,
    lambda: f64,
    convention: WeightConvention,
) -> Result<LossOutput<S>, NnError> {
    if pre_sigmoid.is_empty() {
        return Err(NnError::config("loss needs at least one prediction map"));
    }
    for (l, map) in pre_sigmoid.iter().enumerate() {
        map.check_same_shape(labels, &format!("loss input map {l}"))?;
    }
    let m = labels.n;
    if m == 0 {
        return Err(NnError::config("loss needs a nonempty batch"));
    }
    let s_y = labels.c * labels.plane();

    // Mini-batch edge fraction.
    let ones = labels.data.iter().filter(|&&v| v > real::<S>(0.5)).count();
    let edge_fraction = ones as f64 / labels.numel() as f64;

    let (wp, wn) = match convention {
        WeightConvention::EdgeWeighted => (edge_fraction, lambda * (1.0 - edge_fraction)),
        WeightConvention::ClassBalanced => (lambda * (1.0 - edge_fraction), edge_fraction),
    };
    let norm = 1.0 / (m as f64 * s_y as f64);
    let (lo, hi) = (PROB_CLIP, 1.0 - PROB_CLIP);

    let mut value = 0.0f64;
    let mut grads = Vec::with_capacity(pre_sigmoid.len());
    let wp_s = real::<S>(wp * norm);
    let wn_s = real::<S>(wn * norm);
    for map in pre_sigmoid {
        let mut grad = Tensor4::zeros(labels.n, labels.c, labels.h, labels.w);
        for i in 0..labels.numel() {
            let z = map.data[i];
            let y_pos = labels.data[i] > real::<S>(0.5);
            let p = sigmoid_scalar(z.to_f64()).clamp(lo, hi);
            let sig = sigmoid_scalar(z);
            if y_pos {
                value -= wp * norm * p.ln();
                // d/dz of -wp*norm*ln(sigmoid(z)) = -wp*norm*(1-sigmoid)
                grad.data[i] = -wp_s * (S::one() - sig);
            } else {
                value -= wn * norm * (1.0 - p).ln();
                // d/dz of -wn*norm*ln(1-sigmoid(z)) = wn*norm*sigmoid
                grad.data[i] = wn_s * sig;
            }
        }
        grads.push(grad);
    }
    if !value.is_finite() {
        return Err(NnError::Training(format!("loss is not finite: {value}")));
    }
    Ok(LossOutput { value, grads, edge_fraction })
}
