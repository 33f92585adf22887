//! Full-batch training loops with early stopping.

use nalgebra::DMatrix;

use super::adam::{Adam, AdamConfig};
use super::params::{ParamSet, SemiGcnParams, VgaeParams};
use super::semi::{self, semisup_gradients, NUM_CLASSES};
use super::vgae::{
    draw_noise, gradients_with_weights, vgae_forward_eval, vgae_forward_with_noise, LossParts, ReconWeights,
};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::latent::Graph;
use crate::rng::{stream_rng, Stream};
use crate::spectral::{normalized_adjacency, Embedding, EmbeddingMethod};

/// Minimum decrease of the training loss that resets the patience counter.
pub const IMPROVEMENT_TOL: f64 = 1e-6;

/// Loss values of one epoch, evaluated at the parameters before the update.
/// The semisupervised model reports its cross-entropy as `recon` and `kl = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub recon: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_loss: f64,
}

#[derive(Debug, Clone)]
pub struct VgaeRun {
    /// Evaluation-mode means `mu` of the kept parameters.
    pub embedding: Embedding,
    pub params: VgaeParams,
    pub trace: TrainingTrace,
}

#[derive(Debug, Clone)]
pub struct SemiRun {
    /// Predicted class of every node, labelled ones included.
    pub predictions: Vec<u8>,
    pub logits: DMatrix<f64>,
    pub params: SemiGcnParams,
    pub trace: TrainingTrace,
}

/// Adam with early stopping on the training loss; returns the parameters
/// that attained the lowest recorded loss.
fn optimise<P, F>(mut params: P, config: &TrainConfig, mut evaluate: F) -> Result<(P, TrainingTrace)>
where
    P: ParamSet,
    F: FnMut(&P) -> Result<(LossParts, P)>,
{
    let mut adam = Adam::new(
        AdamConfig {
            weight_decay: config.weight_decay,
            ..AdamConfig::new(config.learning_rate)
        },
        &params,
    );
    let mut best = params.clone();
    let mut trace = TrainingTrace {
        epochs: Vec::new(),
        best_epoch: 0,
        best_loss: f64::INFINITY,
    };
    let mut reference = f64::INFINITY;
    let mut stale = 0;
    for epoch in 0..config.max_epochs {
        let (loss, grads) = evaluate(&params)?;
        if !loss.total.is_finite() || !grads.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                loss: loss.total,
            });
        }
        trace.epochs.push(EpochRecord {
            epoch,
            loss: loss.total,
            recon: loss.recon,
            kl: loss.kl,
        });
        if loss.total < trace.best_loss {
            trace.best_loss = loss.total;
            trace.best_epoch = epoch;
            best.clone_from(&params);
        }
        if loss.total < reference - IMPROVEMENT_TOL {
            reference = loss.total;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
        adam.step(&mut params, &grads);
    }
    Ok((best, trace))
}

/// Trains the variational auto-encoder on `graph` (with its precomputed
/// normalised adjacency).
pub fn train_vgae(graph: &Graph, a_norm: &DMatrix<f64>, config: &TrainConfig) -> Result<VgaeRun> {
    config.validate()?;
    let n = graph.n();
    if a_norm.shape() != (n, n) {
        return Err(Error::Contract(format!(
            "normalised adjacency {:?} does not match {n} nodes",
            a_norm.shape()
        )));
    }
    let weights = ReconWeights::new(graph)?;
    let init = VgaeParams::glorot(
        n,
        config.hidden,
        config.out_dim,
        &mut stream_rng(config.seed, Stream::WeightInit),
    );
    let mut noise = stream_rng(config.seed, Stream::Noise);
    let (params, trace) = optimise(init, config, |p| {
        let epsilon = draw_noise(n, config.out_dim, &mut noise);
        let state = vgae_forward_with_noise(p, a_norm, config.activation, epsilon)?;
        Ok(gradients_with_weights(
            p,
            &state,
            graph,
            a_norm,
            config.activation,
            &weights,
        ))
    })?;
    let mu = vgae_forward_eval(&params, a_norm, config.activation)?.mu;
    Ok(VgaeRun {
        embedding: Embedding::new(mu, EmbeddingMethod::GcnUnsup)?,
        params,
        trace,
    })
}

/// Unsupervised embedding: the mean of the trained variational encoder.
pub fn train_unsupervised(graph: &Graph, config: &TrainConfig) -> Result<Embedding> {
    Ok(train_vgae(graph, &normalized_adjacency(graph), config)?.embedding)
}

/// Trains the semisupervised classifier on labels of nodes `0..labels.len()`.
pub fn fit_semisupervised(a_norm: &DMatrix<f64>, labels: &[u8], config: &TrainConfig) -> Result<SemiRun> {
    config.validate()?;
    let n = a_norm.nrows();
    if labels.is_empty() || labels.len() > n {
        return Err(Error::Parameter(format!(
            "need between 1 and {n} labels, got {}",
            labels.len()
        )));
    }
    let init = SemiGcnParams::glorot(
        n,
        config.hidden,
        NUM_CLASSES,
        &mut stream_rng(config.seed, Stream::WeightInit),
    );
    let (params, trace) = optimise(init, config, |p| {
        let (loss, grads) = semisup_gradients(p, a_norm, config.activation, labels)?;
        Ok((
            LossParts {
                total: loss,
                recon: loss,
                kl: 0.0,
            },
            grads,
        ))
    })?;
    let logits = semi::forward(&params, a_norm, config.activation)?.logits;
    Ok(SemiRun {
        predictions: semi::predict(&logits),
        logits,
        params,
        trace,
    })
}

/// Predicted labels of the unlabelled nodes `labels.len()..n`.
pub fn train_semisupervised(graph: &Graph, labels: &[u8], config: &TrainConfig) -> Result<Vec<u8>> {
    if labels.len() >= graph.n() {
        return Err(Error::Parameter(format!(
            "{} labels leave no unlabelled node among {}",
            labels.len(),
            graph.n()
        )));
    }
    let run = fit_semisupervised(&normalized_adjacency(graph), labels, config)?;
    Ok(run.predictions[labels.len()..].to_vec())
}
