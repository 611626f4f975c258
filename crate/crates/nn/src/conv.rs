//! 2D convolution (cross-correlation) with zero padding, plus reverse-mode
//! gradients with respect to input, weights and bias.
//!
//! The stride-1 path — the only one the edge network uses — is written as
//! shift-and-accumulate over contiguous rows so the compiler can vectorize
//! the inner loops; a straightforward general path covers other strides.

use crate::error::NnError;
use crate::real::Real;
use crate::tensor::Tensor4;

/// A 2D convolution layer: weights (out_ch, in_ch, k, k) stored row-major,
/// one bias per output channel, square kernel of odd size `k`, zero padding
/// `pad`, stride `stride`.
#[derive(Debug, Clone)]
pub struct ConvLayer<S> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
    pub pad: usize,
    pub stride: usize,
    pub weight: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Real> ConvLayer<S> {
    /// Zero-initialized layer. The kernel size must be odd and the stride
    /// at least 1.
    pub fn new(
        in_ch: usize,
        out_ch: usize,
        k: usize,
        pad: usize,
        stride: usize,
    ) -> Result<Self, NnError> {
        if k % 2 == 0 || k == 0 {
            return Err(NnError::config(format!("kernel size must be odd, got {k}")));
        }
        if stride == 0 {
            return Err(NnError::config("stride must be at least 1"));
        }
        if in_ch == 0 || out_ch == 0 {
            return Err(NnError::config("channel counts must be positive"));
        }
        Ok(Self {
            in_ch,
            out_ch,
            k,
            pad,
            stride,
            weight: vec![S::zero(); out_ch * in_ch * k * k],
            bias: vec![S::zero(); out_ch],
        })
    }

    #[inline(always)]
    fn widx(&self, oc: usize, ic: usize, kh: usize, kw: usize) -> usize {
        ((oc * self.in_ch + ic) * self.k + kh) * self.k + kw
    }

    /// Spatial output size for an input of size (h, w).
    pub fn out_size(&self, h: usize, w: usize) -> Result<(usize, usize), NnError> {
        let (he, we) = (h + 2 * self.pad, w + 2 * self.pad);
        if he < self.k || we < self.k {
            return Err(NnError::config(format!(
                "input {h}x{w} with padding {} is smaller than the {}x{} kernel",
                self.pad, self.k, self.k
            )));
        }
        Ok(((he - self.k) / self.stride + 1, (we - self.k) / self.stride + 1))
    }

    fn check_input(&self, x: &Tensor4<S>) -> Result<(), NnError> {
        if x.c != self.in_ch {
            return Err(NnError::config(format!(
                "convolution expects {} input channels, got {}",
                self.in_ch, x.c
            )));
        }
        Ok(())
    }

    /// Forward cross-correlation with zero padding.
    pub fn forward(&self, x: &Tensor4<S>) -> Result<Tensor4<S>, NnError> {
        self.check_input(x)?;
        let (h_out, w_out) = self.out_size(x.h, x.w)?;
        let mut out = Tensor4::zeros(x.n, self.out_ch, h_out, w_out);
        if self.stride == 1 {
            self.forward_stride1(x, &mut out);
        } else {
            self.forward_general(x, &mut out, h_out, w_out);
        }
        debug_assert!(out.all_finite(), "convolution produced non-finite values");
        Ok(out)
    }

    fn forward_stride1(&self, x: &Tensor4<S>, out: &mut Tensor4<S>) {
        let (h, w) = (x.h, x.w);
        let (h_out, w_out) = (out.h, out.w);
        let (k, pad) = (self.k, self.pad);
        for n in 0..x.n {
            for oc in 0..self.out_ch {
                let out_plane = out.plane_slice_mut(n, oc);
                let b = self.bias[oc];
                for v in out_plane.iter_mut() {
                    *v = b;
                }
                for ic in 0..self.in_ch {
                    let x_plane = x.plane_slice(n, ic);
                    for kh in 0..k {
                        // valid output rows: 0 <= oh + kh - pad < h
                        let oh0 = pad.saturating_sub(kh);
                        let oh1 = (h + pad).saturating_sub(kh).min(h_out);
                        for kw in 0..k {
                            let wv = self.weight[self.widx(oc, ic, kh, kw)];
                            let ow0 = pad.saturating_sub(kw);
                            let ow1 = (w + pad).saturating_sub(kw).min(w_out);
                            if ow0 >= ow1 {
                                continue;
                            }
                            let len = ow1 - ow0;
                            for oh in oh0..oh1 {
                                let ih = oh + kh - pad;
                                let xo = ih * w + ow0 + kw - pad;
                                let oo = oh * w_out + ow0;
                                let x_row = &x_plane[xo..xo + len];
                                let o_row = &mut out_plane[oo..oo + len];
                                for (o, &xv) in o_row.iter_mut().zip(x_row) {
                                    *o = *o + wv * xv;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn forward_general(&self, x: &Tensor4<S>, out: &mut Tensor4<S>, h_out: usize, w_out: usize) {
        let (h, w) = (x.h, x.w);
        for n in 0..x.n {
            for oc in 0..self.out_ch {
                for oh in 0..h_out {
                    for ow in 0..w_out {
                        let mut acc = self.bias[oc];
                        for ic in 0..self.in_ch {
                            for kh in 0..self.k {
                                let ih = (oh * self.stride + kh) as i64 - self.pad as i64;
                                if ih < 0 || ih >= h as i64 {
                                    continue;
                                }
                                for kw in 0..self.k {
                                    let iw = (ow * self.stride + kw) as i64 - self.pad as i64;
                                    if iw < 0 || iw >= w as i64 {
                                        continue;
                                    }
                                    acc = acc
                                        + self.weight[self.widx(oc, ic, kh, kw)]
                                            * x.at(n, ic, ih as usize, iw as usize);
                                }
                            }
                        }
                        *out.at_mut(n, oc, oh, ow) = acc;
                    }
                }
            }
        }
    }

    /// Reverse-mode gradients. Returns (d input, d weight, d bias) for the
    /// upstream gradient `grad_out`, which must have the forward output
    /// shape for `x`.
    pub fn backward(
        &self,
        x: &Tensor4<S>,
        grad_out: &Tensor4<S>,
    ) -> Result<(Tensor4<S>, Vec<S>, Vec<S>), NnError> {
        self.check_input(x)?;
        let (h_out, w_out) = self.out_size(x.h, x.w)?;
        if grad_out.shape() != (x.n, self.out_ch, h_out, w_out) {
            return Err(NnError::config(format!(
                "gradient shape {:?} does not match convolution output ({}, {}, {h_out}, {w_out})",
                grad_out.shape(),
                x.n,
                self.out_ch
            )));
        }
        let mut grad_x = Tensor4::zeros(x.n, x.c, x.h, x.w);
        let mut grad_w = vec![S::zero(); self.weight.len()];
        let mut grad_b = vec![S::zero(); self.bias.len()];
        if self.stride == 1 {
            self.backward_stride1(x, grad_out, &mut grad_x, &mut grad_w, &mut grad_b);
        } else {
            self.backward_general(x, grad_out, &mut grad_x, &mut grad_w, &mut grad_b);
        }
        Ok((grad_x, grad_w, grad_b))
    }

    fn backward_stride1(
        &self,
        x: &Tensor4<S>,
        grad_out: &Tensor4<S>,
        grad_x: &mut Tensor4<S>,
        grad_w: &mut [S],
        grad_b: &mut [S],
    ) {
        let (h, w) = (x.h, x.w);
        let (h_out, w_out) = (grad_out.h, grad_out.w);
        let (k, pad) = (self.k, self.pad);
        for n in 0..x.n {
            for oc in 0..self.out_ch {
                let go_plane = grad_out.plane_slice(n, oc);
                let mut bsum = S::zero();
                for &g in go_plane {
                    bsum = bsum + g;
                }
                grad_b[oc] = grad_b[oc] + bsum;
                for ic in 0..self.in_ch {
                    let x_plane = x.plane_slice(n, ic);
                    let gx_plane = grad_x.plane_slice_mut(n, ic);
                    for kh in 0..k {
                        let oh0 = pad.saturating_sub(kh);
                        let oh1 = (h + pad).saturating_sub(kh).min(h_out);
                        for kw in 0..k {
                            let wv = self.weight[self.widx(oc, ic, kh, kw)];
                            let ow0 = pad.saturating_sub(kw);
                            let ow1 = (w + pad).saturating_sub(kw).min(w_out);
                            if ow0 >= ow1 {
                                continue;
                            }
                            let len = ow1 - ow0;
                            let mut acc = S::zero();
                            for oh in oh0..oh1 {
                                let ih = oh + kh - pad;
                                let xo = ih * w + ow0 + kw - pad;
                                let oo = oh * w_out + ow0;
                                let go_row = &go_plane[oo..oo + len];
                                let x_row = &x_plane[xo..xo + len];
                                let gx_row = &mut gx_plane[xo..xo + len];
                                for i in 0..len {
                                    let g = go_row[i];
                                    acc = acc + g * x_row[i];
                                    gx_row[i] = gx_row[i] + wv * g;
                                }
                            }
                            let wi = self.widx(oc, ic, kh, kw);
                            grad_w[wi] = grad_w[wi] + acc;
                        }
                    }
                }
            }
        }
    }

    fn backward_general(
        &self,
        x: &Tensor4<S>,
        grad_out: &Tensor4<S>,
        grad_x: &mut Tensor4<S>,
        grad_w: &mut [S],
        grad_b: &mut [S],
    ) {
        let (h, w) = (x.h, x.w);
        for n in 0..x.n {
            for oc in 0..self.out_ch {
                for oh in 0..grad_out.h {
                    for ow in 0..grad_out.w {
                        let g = grad_out.at(n, oc, oh, ow);
                        grad_b[oc] = grad_b[oc] + g;
                        for ic in 0..self.in_ch {
                            for kh in 0..self.k {
                                let ih = (oh * self.stride + kh) as i64 - self.pad as i64;
                                if ih < 0 || ih >= h as i64 {
                                    continue;
                                }
                                for kw in 0..self.k {
                                    let iw = (ow * self.stride + kw) as i64 - self.pad as i64;
                                    if iw < 0 || iw >= w as i64 {
                                        continue;
                                    }
                                    let wi = self.widx(oc, ic, kh, kw);
                                    grad_w[wi] =
                                        grad_w[wi] + g * x.at(n, ic, ih as usize, iw as usize);
                                    *grad_x.at_mut(n, ic, ih as usize, iw as usize) = grad_x
                                        .at(n, ic, ih as usize, iw as usize)
                                        + self.weight[wi] * g;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
