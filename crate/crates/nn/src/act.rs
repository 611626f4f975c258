//! Elementwise activations: leaky ReLU (slope 0.2) and the logistic
//! sigmoid, with their reverse-mode rules.

use crate::real::{real, Real};
use crate::tensor::Tensor4;

/// Negative-side slope of the leaky ReLU.
pub const LRELU_ALPHA: f64 = 0.2;

/// max(0, z) + 0.2 * min(0, z), elementwise.
pub fn lrelu<S: Real>(x: &Tensor4<S>) -> Tensor4<S> {
    let a = real::<S>(LRELU_ALPHA);
    x.map(|v| if v > S::zero() { v } else { a * v })
}

/// Backward through the leaky ReLU: the slope is 1 on the positive side
/// and 0.2 elsewhere, decided by the forward input `pre`.
pub fn lrelu_backward<S: Real>(pre: &Tensor4<S>, grad_out: &Tensor4<S>) -> Tensor4<S> {
    debug_assert_eq!(pre.shape(), grad_out.shape());
    let a = real::<S>(LRELU_ALPHA);
    let mut out = grad_out.clone();
    for (o, &p) in out.data.iter_mut().zip(&pre.data) {
        if p <= S::zero() {
            *o = a * *o;
        }
    }
    out
}

/// 1 / (1 + e^{-z}), elementwise. Strictly inside (0, 1) for finite input.
pub fn sigmoid<S: Real>(x: &Tensor4<S>) -> Tensor4<S> {
    x.map(sigmoid_scalar)
}

/// Numerically stable scalar sigmoid: both branches keep the exponential
/// argument non-positive, so the result never overflows and stays in (0,1).
#[inline(always)]
pub fn sigmoid_scalar<S: Real>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}
