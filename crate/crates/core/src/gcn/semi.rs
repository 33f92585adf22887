//! Semisupervised two-layer GCN: logits, cross-entropy and gradients.

use nalgebra::DMatrix;

use super::params::SemiGcnParams;
use super::Activation;
use crate::error::{Error, Result};

/// Number of node classes in the binary problems studied here.
pub const NUM_CLASSES: usize = 2;

pub(crate) struct SemiForward {
    pub logits: DMatrix<f64>,
    hidden_pre: DMatrix<f64>,
    hidden_out: DMatrix<f64>,
}

pub(crate) fn forward(params: &SemiGcnParams, a_norm: &DMatrix<f64>, activation: Activation) -> Result<SemiForward> {
    if !a_norm.is_square() {
        return Err(Error::Contract(format!(
            "normalised adjacency must be square, got {:?}",
            a_norm.shape()
        )));
    }
    params.check_shapes(a_norm.nrows())?;
    let hidden_pre = a_norm * &params.w0;
    let hidden_out = a_norm * hidden_pre.map(|v| activation.apply(v));
    let logits = &hidden_out * &params.w1;
    Ok(SemiForward {
        logits,
        hidden_pre,
        hidden_out,
    })
}

/// `Ã · act(Ã · W0) · W1` (node features are the identity).
pub fn gcn_forward(params: &SemiGcnParams, a_norm: &DMatrix<f64>, activation: Activation) -> Result<DMatrix<f64>> {
    Ok(forward(params, a_norm, activation)?.logits)
}

fn check_labels(logits: &DMatrix<f64>, labels: &[u8]) -> Result<()> {
    if labels.len() > logits.nrows() {
        return Err(Error::Parameter(format!(
            "{} labels for {} nodes",
            labels.len(),
            logits.nrows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| usize::from(y) >= logits.ncols()) {
        return Err(Error::Parameter(format!(
            "label {bad} out of range for {} classes",
            logits.ncols()
        )));
    }
    Ok(())
}

/// Log-sum-exp of one row, and the row's softmax written into `probs`.
fn log_softmax_row(logits: &DMatrix<f64>, i: usize, probs: &mut [f64]) -> f64 {
    let max = (0..logits.ncols())
        .map(|k| logits[(i, k)])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (k, p) in probs.iter_mut().enumerate() {
        *p = (logits[(i, k)] - max).exp();
        sum += *p;
    }
    probs.iter_mut().for_each(|p| *p /= sum);
    max + sum.ln()
}

/// Softmax cross-entropy summed over the labelled nodes `0..labels.len()`.
pub fn semisup_loss(logits: &DMatrix<f64>, labels: &[u8]) -> Result<f64> {
    check_labels(logits, labels)?;
    let mut probs = vec![0.0; logits.ncols()];
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| log_softmax_row(logits, i, &mut probs) - logits[(i, usize::from(y))])
        .sum())
}

/// Loss and gradients of [`semisup_loss`] through [`gcn_forward`].
pub fn semisup_gradients(
    params: &SemiGcnParams,
    a_norm: &DMatrix<f64>,
    activation: Activation,
    labels: &[u8],
) -> Result<(f64, SemiGcnParams)> {
    let fwd = forward(params, a_norm, activation)?;
    check_labels(&fwd.logits, labels)?;
    let classes = params.classes();
    let mut grad_logits = DMatrix::zeros(fwd.logits.nrows(), classes);
    let mut probs = vec![0.0; classes];
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let y = usize::from(y);
        loss += log_softmax_row(&fwd.logits, i, &mut probs) - fwd.logits[(i, y)];
        for (k, &p) in probs.iter().enumerate() {
            grad_logits[(i, k)] = p - if k == y { 1.0 } else { 0.0 };
        }
    }
    let grad_w1 = fwd.hidden_out.tr_mul(&grad_logits);
    let grad_hidden_out = &grad_logits * params.w1.transpose();
    let grad_hidden_pre = a_norm
        .tr_mul(&grad_hidden_out)
        .component_mul(&fwd.hidden_pre.map(|v| activation.derivative(v)));
    let grad_w0 = a_norm.tr_mul(&grad_hidden_pre);
    Ok((
        loss,
        SemiGcnParams {
            w0: grad_w0,
            w1: grad_w1,
        },
    ))
}

/// Row-wise argmax, ties resolved toward the lower class index.
pub(crate) fn predict(logits: &DMatrix<f64>) -> Vec<u8> {
    (0..logits.nrows())
        .map(|i| {
            let mut best = 0;
            for k in 1..logits.ncols() {
                if logits[(i, k)] > logits[(i, best)] {
                    best = k;
                }
            }
            best as u8
        })
        .collect()
}
