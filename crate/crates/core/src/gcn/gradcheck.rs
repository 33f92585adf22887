//! Central finite-difference verification of the analytic gradients.

use nalgebra::DMatrix;
use rand::Rng;

use super::params::{ParamSet, SemiGcnParams, VgaeParams};
use super::semi::{self, semisup_gradients, semisup_loss, NUM_CLASSES};
use super::vgae::{draw_noise, gradients_with_weights, loss_with_weights, vgae_forward_with_noise, ReconWeights};
use super::Activation;
use crate::error::{Error, Result};
use crate::latent::{sample_erdos_renyi, Graph};
use crate::rng::{stream_rng, Stream};
use crate::spectral::normalized_adjacency;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Denominator floor of the relative error, so that coordinates whose
/// gradient is numerically zero are compared absolutely.
const RELATIVE_FLOOR: f64 = 1e-6;
const FIXTURE_HIDDEN: usize = 3;
const FIXTURE_OUT: usize = 2;
const FIXTURE_EDGE_PROB: f64 = 0.4;
const MAX_FIXTURE_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinates compared.
    pub checked: usize,
    /// First-layer coordinates whose perturbation crosses a ReLU kink.
    pub skipped_at_kink: usize,
}

/// Maximum relative error of both models' gradients on a random ReLU
/// fixture with `n_fixture` nodes.
pub fn grad_check(n_fixture: usize, seed: u64) -> Result<f64> {
    Ok(grad_check_with(n_fixture, seed, Activation::Relu, 1.0)?.max_rel_error)
}

/// As [`grad_check`], with a chosen activation and the Glorot weights
/// multiplied by `weight_scale` (0 gives the all-zero fixture).
pub fn grad_check_with(
    n_fixture: usize,
    seed: u64,
    activation: Activation,
    weight_scale: f64,
) -> Result<GradCheckReport> {
    if !(2..=MAX_FIXTURE_NODES).contains(&n_fixture) {
        return Err(Error::Parameter(format!(
            "gradient-check fixtures need 2..={MAX_FIXTURE_NODES} nodes, got {n_fixture}"
        )));
    }
    let n = n_fixture;
    let mut graph = sample_erdos_renyi(n, FIXTURE_EDGE_PROB, &mut stream_rng(seed, Stream::Fixture))?;
    if 2 * graph.edge_count() == n * (n - 1) {
        graph = Graph::empty(n);
    }
    let a_norm = normalized_adjacency(&graph);
    let mut rng = stream_rng(seed, Stream::WeightInit);
    let scale = |m: DMatrix<f64>| m * weight_scale;

    let vgae = VgaeParams::glorot(n, FIXTURE_HIDDEN, FIXTURE_OUT, &mut rng);
    let vgae = VgaeParams {
        w0: scale(vgae.w0),
        w1_mu: scale(vgae.w1_mu),
        w1_sigma: scale(vgae.w1_sigma),
    };
    let epsilon = draw_noise(n, FIXTURE_OUT, &mut stream_rng(seed, Stream::Noise));
    let weights = ReconWeights::new(&graph)?;
    let vgae_loss = |p: &VgaeParams| -> Result<f64> {
        let state = vgae_forward_with_noise(p, &a_norm, activation, epsilon.clone())?;
        Ok(loss_with_weights(&state, &graph, &weights).total)
    };
    let state = vgae_forward_with_noise(&vgae, &a_norm, activation, epsilon.clone())?;
    let (_, vgae_grads) = gradients_with_weights(&vgae, &state, &graph, &a_norm, activation, &weights);
    let first = compare(&vgae, &vgae_grads, &a_norm, activation, vgae_loss)?;

    let semi = SemiGcnParams::glorot(n, FIXTURE_HIDDEN, NUM_CLASSES, &mut rng);
    let semi = SemiGcnParams {
        w0: scale(semi.w0),
        w1: scale(semi.w1),
    };
    let labels: Vec<u8> = (0..n.div_ceil(2)).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let semi_loss =
        |p: &SemiGcnParams| -> Result<f64> { semisup_loss(&semi::forward(p, &a_norm, activation)?.logits, &labels) };
    let (_, semi_grads) = semisup_gradients(&semi, &a_norm, activation, &labels)?;
    let second = compare(&semi, &semi_grads, &a_norm, activation, semi_loss)?;

    Ok(GradCheckReport {
        max_rel_error: first.max_rel_error.max(second.max_rel_error),
        checked: first.checked + second.checked,
        skipped_at_kink: first.skipped_at_kink + second.skipped_at_kink,
    })
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Compares every coordinate of `grads` with a central difference of `loss`.
/// The first tensor of both parameter sets is the first-layer weight `W0`.
fn compare<P, F>(
    params: &P,
    grads: &P,
    a_norm: &DMatrix<f64>,
    activation: Activation,
    loss: F,
) -> Result<GradCheckReport>
where
    P: ParamSet,
    F: Fn(&P) -> Result<f64>,
{
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped_at_kink: 0,
    };
    let first_layer = |p: &P| -> Vec<bool> { (a_norm * p.tensors()[0]).iter().map(|&v| v > 0.0).collect() };
    let base_pattern = first_layer(params);
    let tensor_count = params.tensors().len();
    for t in 0..tensor_count {
        let len = params.tensors()[t].len();
        for c in 0..len {
            let mut plus = params.clone();
            plus.tensors_mut()[t].as_mut_slice()[c] += FD_STEP;
            let mut minus = params.clone();
            minus.tensors_mut()[t].as_mut_slice()[c] -= FD_STEP;
            if t == 0 && activation == Activation::Relu {
                let crosses = |p: &P| {
                    let pre = a_norm * p.tensors()[0];
                    pre.iter()
                        .zip(&base_pattern)
                        .any(|(&v, &on)| (v > 0.0) != on || v == 0.0)
                };
                if crosses(&plus) || crosses(&minus) {
                    report.skipped_at_kink += 1;
                    continue;
                }
            }
            let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * FD_STEP);
            let analytic = grads.tensors()[t].as_slice()[c];
            let err = relative_error(analytic, numeric);
            if !err.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite gradient comparison at tensor {t}, coordinate {c}"
                )));
            }
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}
