//! Dense 4D tensors in NCHW layout — the only container the network needs.

use crate::error::NnError;
use crate::real::Real;

/// A dense rank-4 tensor with shape (batch, channels, height, width) and
/// contiguous row-major storage: index (n, c, h, w) lives at
/// `((n * C + c) * H + h) * W + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<S> {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<S>,
}

impl<S: Real> Tensor4<S> {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self { n, c, h, w, data: vec![S::zero(); n * c * h * w] }
    }

    /// Wrap an existing buffer; its length must equal the product of the
    /// shape.
    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<S>) -> Result<Self, NnError> {
        if data.len() != n * c * h * w {
            return Err(NnError::config(format!(
                "tensor data length {} does not match shape ({n}, {c}, {h}, {w})",
                data.len()
            )));
        }
        Ok(Self { n, c, h, w, data })
    }

    #[inline(always)]
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    #[inline(always)]
    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Number of elements in one image plane (H*W).
    #[inline(always)]
    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    #[inline(always)]
    pub fn idx(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        debug_assert!(n < self.n && c < self.c && h < self.h && w < self.w);
        ((n * self.c + c) * self.h + h) * self.w + w
    }

    #[inline(always)]
    pub fn at(&self, n: usize, c: usize, h: usize, w: usize) -> S {
        self.data[self.idx(n, c, h, w)]
    }

    #[inline(always)]
    pub fn at_mut(&mut self, n: usize, c: usize, h: usize, w: usize) -> &mut S {
        let i = self.idx(n, c, h, w);
        &mut self.data[i]
    }

    /// Immutable view of one (n, c) image plane.
    #[inline(always)]
    pub fn plane_slice(&self, n: usize, c: usize) -> &[S] {
        let p = self.plane();
        let start = (n * self.c + c) * p;
        &self.data[start..start + p]
    }

    /// Mutable view of one (n, c) image plane.
    #[inline(always)]
    pub fn plane_slice_mut(&mut self, n: usize, c: usize) -> &mut [S] {
        let p = self.plane();
        let start = (n * self.c + c) * p;
        &mut self.data[start..start + p]
    }

    /// Elementwise map into a new tensor.
    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            n: self.n,
            c: self.c,
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True if every entry is finite. Debug builds assert this in the
    /// kernels; release builds check only where divergence is diagnosed.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Guard helper: shapes must agree exactly.
    pub fn check_same_shape(&self, other: &Self, what: &str) -> Result<(), NnError> {
        if self.shape() != other.shape() {
            return Err(NnError::config(format!(
                "{what}: shape {:?} does not match {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}
