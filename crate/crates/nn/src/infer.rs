//! Solver-facing adapters around a trained edge network.
//!
//! [`AnnsiFlagger`] feeds each element's nodal density image through the
//! network and flags the element when any pixel of the averaged edge map
//! reaches the threshold. [`AnnslLocalizer`] runs the sub-cell-mean variant
//! and returns the thresholded map itself, marking which sub-cells hold the
//! discontinuity. Both normalize their input exactly like the training
//! data, so the decisions are invariant under the same shifts and scales.

use std::path::Path;

use shocknet_core::basis::{apply_tensor2, NodeFamily};
use shocknet_core::dgsem::Operators;
use shocknet_core::error::CoreError;
use shocknet_core::field::ElemKind;
use shocknet_core::indicators::{EdgeMap, ElementFlagger};
use shocknet_core::field::HybridState;
use shocknet_core::sim::ShockLocalizer;

use crate::checkpoint::load_checkpoint;
use crate::datagen::normalize;
use crate::error::NnError;
use crate::hed::HedNetwork;
use crate::tensor::Tensor4;
use crate::train::EDGE_THRESHOLD;

/// Elements per inference batch; results do not depend on this (inference
/// uses running statistics, never batch statistics).
const INFER_BATCH: usize = 256;

fn nn_err(e: NnError) -> CoreError {
    CoreError::Config(format!("edge network failure: {e}"))
}

fn check_degree(net: &HedNetwork<f32>, n: usize) -> Result<(), CoreError> {
    if net.degree + 1 != n {
        return Err(CoreError::Config(format!(
            "edge network expects degree {} but the state has {} nodes per direction",
            net.degree, n
        )));
    }
    Ok(())
}

/// Run `images` (one per element, px*px each) through `net` in batches and
/// return the averaged sigmoid map per element.
fn forward_averages(
    net: &HedNetwork<f32>,
    images: &[Vec<f32>],
    px: usize,
) -> Result<Vec<Vec<f32>>, CoreError> {
    let plane = px * px;
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(INFER_BATCH) {
        let mut data = Vec::with_capacity(chunk.len() * plane);
        for img in chunk {
            data.extend_from_slice(img);
        }
        let x = Tensor4::from_vec(chunk.len(), 1, px, px, data).map_err(nn_err)?;
        let result = net.forward_infer(&x).map_err(nn_err)?;
        for b in 0..chunk.len() {
            out.push(result.average.plane_slice(b, 0).to_vec());
        }
    }
    Ok(out)
}

/// Normalized f32 image of one element's density values.
fn density_image(values: &[f64]) -> Vec<f32> {
    let mut v = values.to_vec();
    normalize(&mut v);
    v.into_iter().map(|x| x as f32).collect()
}

/// Neural troubled-element indicator on nodal density images.
///
/// Produces 1.0 for elements whose averaged edge map contains a pixel at or
/// above the threshold and 0.0 otherwise; with thresholds (0.5, 0.5) the
/// hybrid switching follows that decision directly.
#[derive(Debug)]
pub struct AnnsiFlagger {
    net: HedNetwork<f32>,
}

impl AnnsiFlagger {
    pub fn new(net: HedNetwork<f32>) -> Result<Self, NnError> {
        if net.node_family != NodeFamily::Gauss {
            return Err(NnError::config(
                "the element flagger needs a network trained on Gauss-node images",
            ));
        }
        Ok(Self { net })
    }

    pub fn from_checkpoint(path: &Path) -> Result<Self, NnError> {
        let ck = load_checkpoint(path)?;
        if ck.net.node_family != NodeFamily::Gauss {
            return Err(NnError::format(
                path,
                "checkpoint holds an equispaced-node network, but the element flagger \
                 needs a Gauss-node network",
            ));
        }
        Self::new(ck.net)
    }

    pub fn degree(&self) -> usize {
        self.net.degree
    }
}

impl ElementFlagger for AnnsiFlagger {
    fn evaluate(&self, state: &HybridState, ops: &Operators) -> Result<Vec<f64>, CoreError> {
        let n = state.field.n;
        check_degree(&self.net, n)?;
        let mut images = Vec::with_capacity(state.field.num_elems);
        for e in 0..state.field.num_elems {
            let density = state.field.var(e, 0);
            // The network reads nodal values; sub-cell elements are lifted
            // back onto the polynomial first.
            let nodal = match state.kinds[e] {
                ElemKind::Dg => density.to_vec(),
                ElemKind::Fv => apply_tensor2(&ops.transfer.v_fv_inv, density),
            };
            images.push(density_image(&nodal));
        }
        let averages = forward_averages(&self.net, &images, n)?;
        Ok(averages
            .iter()
            .map(|avg| f64::from(avg.iter().any(|&p| p >= EDGE_THRESHOLD)))
            .collect())
    }

    fn thresholds(&self) -> (f64, f64) {
        (0.5, 0.5)
    }

    fn name(&self) -> &'static str {
        "neural"
    }
}

/// Neural sub-cell shock localizer on sub-cell-mean density images.
#[derive(Debug)]
pub struct AnnslLocalizer {
    net: HedNetwork<f32>,
}

impl AnnslLocalizer {
    pub fn new(net: HedNetwork<f32>) -> Result<Self, NnError> {
        if net.node_family != NodeFamily::Equispaced {
            return Err(NnError::config(
                "the sub-cell localizer needs a network trained on sub-cell-mean images",
            ));
        }
        Ok(Self { net })
    }

    pub fn from_checkpoint(path: &Path) -> Result<Self, NnError> {
        let ck = load_checkpoint(path)?;
        if ck.net.node_family != NodeFamily::Equispaced {
            return Err(NnError::format(
                path,
                "checkpoint holds a Gauss-node network, but the sub-cell localizer \
                 needs an equispaced-node (sub-cell mean) network",
            ));
        }
        Self::new(ck.net)
    }

    pub fn degree(&self) -> usize {
        self.net.degree
    }
}

impl ShockLocalizer for AnnslLocalizer {
    fn localize(
        &self,
        state: &HybridState,
        ops: &Operators,
        elems: &[usize],
    ) -> Result<Vec<EdgeMap>, CoreError> {
        let n = state.field.n;
        check_degree(&self.net, n)?;
        let mut images = Vec::with_capacity(elems.len());
        for &e in elems {
            if e >= state.field.num_elems {
                return Err(CoreError::Config(format!(
                    "localizer asked about element {e} of {}",
                    state.field.num_elems
                )));
            }
            let density = state.field.var(e, 0);
            // The network reads sub-cell means; polynomial elements are
            // projected down first.
            let means = match state.kinds[e] {
                ElemKind::Dg => apply_tensor2(&ops.transfer.v_fv, density),
                ElemKind::Fv => density.to_vec(),
            };
            images.push(density_image(&means));
        }
        let averages = forward_averages(&self.net, &images, n)?;
        Ok(averages
            .into_iter()
            .map(|avg| EdgeMap {
                n,
                flags: avg
                    .into_iter()
                    .map(|p| u8::from(p >= EDGE_THRESHOLD))
                    .collect(),
            })
            .collect())
    }
}
