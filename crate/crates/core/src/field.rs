//! Solution storage for the hybrid scheme.
//!
//! Every element stores (N+1)^2 values per conservative variable. For a DG
//! element these are nodal values at the tensor Gauss points; for an FV
//! element they are sub-cell means on the (N+1)^2 equispaced sub-cells.
//! Both representations have identical footprint, so switching touches only
//! the per-element kind flag and the data in place.

use crate::basis::TransferMatrices;
use crate::euler::ConsState;
use crate::mat::Mat;

pub const NVAR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemKind {
    Dg,
    Fv,
}

#[derive(Debug, Clone)]
pub struct SolutionField {
    /// nodes per direction, N+1
    pub n: usize,
    pub num_elems: usize,
    /// layout: [element][variable][node], node = jy * n + ix
    pub data: Vec<f64>,
}

impl SolutionField {
    pub fn zeros(n: usize, num_elems: usize) -> Self {
        Self { n, num_elems, data: vec![0.0; num_elems * NVAR * n * n] }
    }

    #[inline]
    pub fn nodes_per_elem(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn elem_stride(&self) -> usize {
        NVAR * self.n * self.n
    }

    #[inline]
    pub fn elem(&self, e: usize) -> &[f64] {
        let s = self.elem_stride();
        &self.data[e * s..(e + 1) * s]
    }

    #[inline]
    pub fn elem_mut(&mut self, e: usize) -> &mut [f64] {
        let s = self.elem_stride();
        &mut self.data[e * s..(e + 1) * s]
    }

    #[inline]
    pub fn var(&self, e: usize, v: usize) -> &[f64] {
        let m = self.nodes_per_elem();
        let s = self.elem_stride();
        &self.data[e * s + v * m..e * s + (v + 1) * m]
    }

    #[inline]
    pub fn var_mut(&mut self, e: usize, v: usize) -> &mut [f64] {
        let m = self.nodes_per_elem();
        let s = self.elem_stride();
        &mut self.data[e * s + v * m..e * s + (v + 1) * m]
    }

    #[inline]
    pub fn state_at(&self, e: usize, node: usize) -> ConsState {
        let m = self.nodes_per_elem();
        let base = e * self.elem_stride();
        ConsState {
            rho: self.data[base + node],
            mx: self.data[base + m + node],
            my: self.data[base + 2 * m + node],
            e: self.data[base + 3 * m + node],
        }
    }

    #[inline]
    pub fn set_state(&mut self, e: usize, node: usize, w: ConsState) {
        let m = self.nodes_per_elem();
        let base = e * self.elem_stride();
        self.data[base + node] = w.rho;
        self.data[base + m + node] = w.mx;
        self.data[base + 2 * m + node] = w.my;
        self.data[base + 3 * m + node] = w.e;
    }
}

/// Per-element state of the hybrid solver.
#[derive(Debug, Clone)]
pub struct HybridState {
    pub field: SolutionField,
    pub kinds: Vec<ElemKind>,
    pub time: f64,
}

impl HybridState {
    pub fn new_dg(n: usize, num_elems: usize) -> Self {
        Self {
            field: SolutionField::zeros(n, num_elems),
            kinds: vec![ElemKind::Dg; num_elems],
            time: 0.0,
        }
    }
}

/// Apply a square per-direction transfer matrix to all variables of one
/// element in place (DG <-> FV switching, indicator representation moves).
pub fn transform_elem(field: &mut SolutionField, e: usize, m: &Mat) {
    for v in 0..NVAR {
        let out = crate::basis::apply_tensor2(m, field.var(e, v));
        field.var_mut(e, v).copy_from_slice(&out);
    }
}

/// Switch elements between representations according to `want`, projecting
/// the data with V_FV (DG -> FV) or its inverse (FV -> DG). Elements whose
/// kind already matches are left bitwise untouched.
pub fn switch_elements(state: &mut HybridState, want: &[ElemKind], transfer: &TransferMatrices) {
    assert_eq!(want.len(), state.kinds.len());
    for e in 0..want.len() {
        if state.kinds[e] == want[e] {
            continue;
        }
        match want[e] {
            ElemKind::Fv => transform_elem(&mut state.field, e, &transfer.v_fv),
            ElemKind::Dg => transform_elem(&mut state.field, e, &transfer.v_fv_inv),
        }
        state.kinds[e] = want[e];
    }
}
