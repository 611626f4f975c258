//! Finite-difference verification of the hand-written backward pass.
//!
//! The scalar under test is the deep-supervision loss of a train-mode
//! forward pass. Train-mode normalization uses batch statistics, so the
//! loss value is a pure function of the parameters (the running-statistics
//! update is a side effect that never feeds back into the value), which is
//! exactly what repeated finite-difference evaluations require.
//!
//! One wrinkle: batch norm centers activations at zero, so a +-h parameter
//! perturbation routinely flips some pre-activation across the leaky-ReLU
//! kink, where a central difference measures a mixture of the two slopes
//! rather than the derivative of the branch actually taken. Probes whose
//! two evaluations disagree on any activation sign are therefore skipped
//! (the finite difference is invalid there, not the gradient) and replaced
//! by a fresh draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::NnError;
use crate::hed::HedNetwork;
use crate::loss::{deep_supervision_loss, WeightConvention};
use crate::tensor::Tensor4;

/// Relative-error floor: gradients below this magnitude are compared on an
/// absolute scale. The main-conv biases are the motivating case — mean
/// subtraction in the following normalization layer makes their gradients
/// identically zero, so a pure relative error would divide noise by noise.
pub const REL_FLOOR: f64 = 1e-4;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// One checked parameter.
#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Outcome of a gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Number of parameters compared.
    pub checked: usize,
    /// Number of probes discarded because the finite-difference pair
    /// crossed an activation kink.
    pub skipped: usize,
    /// Largest relative error observed.
    pub max_rel_err: f64,
    /// The parameter that produced it.
    pub worst: ParamCheck,
}

/// Relative error with an absolute floor.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Loss value plus the sign pattern of every pre-activation, which decides
/// whether a finite-difference pair straddles a leaky-ReLU kink.
fn eval_loss_signed(
    net: &mut HedNetwork<f64>,
    x: &Tensor4<f64>,
    labels: &Tensor4<f64>,
    lambda: f64,
    convention: WeightConvention,
) -> Result<(f64, Vec<bool>), NnError> {
    let pass = net.forward_train(x)?;
    let out = deep_supervision_loss(&pass.loss_inputs(), labels, lambda, convention)?;
    let mut signs = Vec::new();
    for t in &pass.pre_act {
        signs.extend(t.data.iter().map(|&v| v > 0.0));
    }
    Ok((out.value, signs))
}

/// Probe a single parameter. `Ok(None)` means the +-h pair crossed a
/// leaky-ReLU kink, so the central difference is not a derivative there.
fn probe_param(
    net: &mut HedNetwork<f64>,
    x: &Tensor4<f64>,
    labels: &Tensor4<f64>,
    lambda: f64,
    convention: WeightConvention,
    t: usize,
    j: usize,
    analytic: f64,
    name: &str,
) -> Result<Option<ParamCheck>, NnError> {
    let (f_plus, signs_plus) = {
        net.params_mut()[t].1[j] += FD_STEP;
        let v = eval_loss_signed(net, x, labels, lambda, convention)?;
        net.params_mut()[t].1[j] -= FD_STEP;
        v
    };
    let (f_minus, signs_minus) = {
        net.params_mut()[t].1[j] -= FD_STEP;
        let v = eval_loss_signed(net, x, labels, lambda, convention)?;
        net.params_mut()[t].1[j] += FD_STEP;
        v
    };
    if signs_plus != signs_minus {
        return Ok(None);
    }
    let numeric = (f_plus - f_minus) / (2.0 * FD_STEP);
    let e = rel_err(analytic, numeric);
    Ok(Some(ParamCheck {
        tensor: name.to_string(),
        index: j,
        analytic,
        numeric,
        rel_err: e,
    }))
}

/// Compare the analytic gradient against central differences on `samples`
/// uniformly drawn parameters plus one deterministic probe per parameter
/// tensor (so every tensor is exercised regardless of its size).
/// Kink-straddling probes are skipped and replaced; `skipped` reports how
/// many draws were discarded that way.
///
/// The network is restored to its original parameters before returning.
pub fn grad_check_network(
    net: &mut HedNetwork<f64>,
    x: &Tensor4<f64>,
    labels: &Tensor4<f64>,
    lambda: f64,
    convention: WeightConvention,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, NnError> {
    // Analytic gradients once.
    let pass = net.forward_train(x)?;
    let loss = deep_supervision_loss(&pass.loss_inputs(), labels, lambda, convention)?;
    let grads = net.backward(x, &pass, &loss.grads)?;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|g| g.to_vec()).collect();
    let names: Vec<String> = net.params().into_iter().map(|(n, _)| n).collect();
    let lens = net.param_lens();
    let total: usize = lens.iter().sum();

    let mut worst: Option<ParamCheck> = None;
    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let record = |c: ParamCheck, max_rel: &mut f64, worst: &mut Option<ParamCheck>| {
        if c.rel_err >= *max_rel || worst.is_none() {
            *max_rel = c.rel_err;
            *worst = Some(c);
        }
    };

    // One probe per tensor: walk forward from its first element until a
    // kink-free pair is found.
    for t in 0..lens.len() {
        for j in 0..lens[t].min(64) {
            match probe_param(net, x, labels, lambda, convention, t, j, analytic[t][j], &names[t])? {
                Some(c) => {
                    record(c, &mut max_rel, &mut worst);
                    checked += 1;
                    break;
                }
                None => skipped += 1,
            }
        }
    }

    // Uniform draws over the whole parameter vector.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut valid = 0usize;
    let mut attempts = 0usize;
    while valid < samples {
        attempts += 1;
        if attempts > 20 * samples {
            return Err(NnError::Training(format!(
                "gradient check could not find {samples} kink-free probes in {attempts} draws"
            )));
        }
        let flat = rng.gen_range(0..total);
        let mut t = 0;
        let mut j = flat;
        while j >= lens[t] {
            j -= lens[t];
            t += 1;
        }
        match probe_param(net, x, labels, lambda, convention, t, j, analytic[t][j], &names[t])? {
            Some(c) => {
                record(c, &mut max_rel, &mut worst);
                checked += 1;
                valid += 1;
            }
            None => skipped += 1,
        }
    }

    Ok(GradCheckReport {
        checked,
        skipped,
        max_rel_err: max_rel,
        worst: worst.expect("at least one parameter is always checked"),
    })
}

/// A random training-style batch to drive the check: inputs in [0, 1],
/// labels Bernoulli so both loss terms are active.
pub fn synthetic_batch(
    degree: usize,
    batch: usize,
    positive_fraction: f64,
    seed: u64,
) -> (Tensor4<f64>, Tensor4<f64>) {
    let px = degree + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Tensor4::zeros(batch, 1, px, px);
    for v in x.data.iter_mut() {
        *v = rng.gen_range(0.0..1.0);
    }
    let mut y = Tensor4::zeros(batch, 1, px, px);
    for v in y.data.iter_mut() {
        *v = if rng.gen_range(0.0..1.0) < positive_fraction { 1.0 } else { 0.0 };
    }
    (x, y)
}
