//! Error-versus-geometry (exp1) and error-versus-label-fraction (exp2)
//! campaigns.
//!
//! One unit of work is a (geometry, replicate) pair: the latent sample, the
//! graph, the spectral embedding and each unsupervised GCN embedding are
//! computed once and scored for every method and labelled-set size. Every
//! random stream is keyed by the replicate seed, so sharing this work gives
//! the same numbers as scoring each method independently.

use nalgebra::DMatrix;

use super::config::{labelled_count, ExperimentConfig, ExperimentKind};
use super::records::ResultRecord;
use super::{geometry_for_gap, run_units};
use crate::classify::{embedding_error, replicate_seed, sample_replicate, Method};
use crate::error::{Error, Result};
use crate::gcn::{train_vgae, TrainConfig};
use crate::latent::{erm_threshold, t_path, LatentModel};
use crate::spectral::{ase, normalized_adjacency};

/// Test errors of `methods` on the replicate with `seed`, indexed
/// `[method][labelled-set size]`; labelled nodes are always a prefix.
pub fn score_replicate(
    model: &LatentModel,
    n: usize,
    seed: u64,
    methods: &[Method],
    train: &TrainConfig,
    labelled: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let rep = sample_replicate(model, n, seed)?;
    let labels = &rep.sample.y;
    let widest = methods
        .iter()
        .filter_map(|m| match m {
            Method::Ase { dim } => Some(*dim),
            _ => None,
        })
        .max();
    let spectral = widest.map(|d| ase(&rep.graph, d)).transpose()?;
    let a_norm = methods
        .iter()
        .any(|m| matches!(m, Method::GcnUnsup { .. }))
        .then(|| normalized_adjacency(&rep.graph));
    methods
        .iter()
        .map(|&method| {
            let embedding: Option<DMatrix<f64>> = match method {
                Method::ErmLatent => None,
                Method::Ase { dim } => {
                    let full = spectral.as_ref().expect("computed for the widest ASE");
                    Some(full.truncated(dim)?.matrix)
                }
                Method::GcnUnsup { activation } => {
                    let config = TrainConfig {
                        activation,
                        seed,
                        ..train.clone()
                    };
                    let a_norm = a_norm.as_ref().expect("computed for GCN methods");
                    Some(train_vgae(&rep.graph, a_norm, &config)?.embedding.matrix)
                }
                Method::GcnSemisup { .. } => {
                    return Err(Error::Contract(format!("{method} is not scored by this campaign")));
                }
            };
            labelled
                .iter()
                .map(|&m| match &embedding {
                    None => {
                        let rule = erm_threshold(&rep.sample.z[..m], &labels[..m]);
                        Ok(rule.error_rate(&rep.sample.z[m..], &labels[m..]))
                    }
                    Some(e) => embedding_error(e, labels, m),
                })
                .collect()
        })
        .collect()
}

/// Columns of a record that depend on the method.
#[allow(clippy::too_many_arguments)]
pub(crate) fn method_record(
    experiment: ExperimentKind,
    method: Method,
    train: &TrainConfig,
    n: usize,
    m: usize,
    angle: f64,
    replicate: usize,
    seed: u64,
    test_error: f64,
) -> ResultRecord {
    let gcn = match method {
        Method::GcnUnsup { activation } | Method::GcnSemisup { activation } => Some(activation),
        Method::ErmLatent | Method::Ase { .. } => None,
    };
    ResultRecord {
        experiment: experiment.as_str().into(),
        method: method.tag(),
        n,
        m,
        angle_diff_rad: Some(angle),
        hidden: gcn.map(|_| train.hidden),
        lr: gcn.map(|_| train.learning_rate),
        activation: gcn,
        replicate,
        seed,
        test_error,
    }
}

/// Error along the translation path from `t_start` to `t_end`.
///
/// Every path point is validated before any replicate is sampled.
pub fn run_exp1(config: &ExperimentConfig, replicates: &[usize]) -> Result<Vec<ResultRecord>> {
    let model = LatentModel::fig1_canonical();
    let path = t_path(&model, config.t_start, config.t_end, config.k)?;
    let units: Vec<(usize, usize)> = (0..path.len())
        .flat_map(|g| replicates.iter().map(move |&r| (g, r)))
        .collect();
    let scores = run_units(
        &units,
        |&(_, r)| replicate_seed(config.base_seed, r),
        |&(g, r)| {
            let point = model.with_srt(path[g].params);
            let seed = replicate_seed(config.base_seed, r);
            score_replicate(&point, config.n, seed, &config.methods, &config.train, &[config.m])
        },
    )?;
    let mut records = Vec::with_capacity(scores.len() * config.methods.len());
    for (g, point) in path.iter().enumerate() {
        let block = &scores[g * replicates.len()..(g + 1) * replicates.len()];
        for (k, &method) in config.methods.iter().enumerate() {
            for (&r, errors) in replicates.iter().zip(block) {
                records.push(method_record(
                    ExperimentKind::Exp1,
                    method,
                    &config.train,
                    config.n,
                    config.m,
                    point.gap,
                    r,
                    replicate_seed(config.base_seed, r),
                    errors[k][0],
                ));
            }
        }
    }
    Ok(records)
}

/// Error as the labelled fraction grows, at several fixed geometries.
pub fn run_exp2(config: &ExperimentConfig, replicates: &[usize]) -> Result<Vec<ResultRecord>> {
    let models = config
        .gaps
        .iter()
        .map(|&gap| geometry_for_gap(gap))
        .collect::<Result<Vec<_>>>()?;
    let labelled: Vec<usize> = config.ratios.iter().map(|&r| labelled_count(r, config.n)).collect();
    let units: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|g| replicates.iter().map(move |&r| (g, r)))
        .collect();
    let scores = run_units(
        &units,
        |&(_, r)| replicate_seed(config.base_seed, r),
        |&(g, r)| {
            let seed = replicate_seed(config.base_seed, r);
            score_replicate(&models[g].0, config.n, seed, &config.methods, &config.train, &labelled)
        },
    )?;
    let mut records = Vec::new();
    for (g, (_, angle)) in models.iter().enumerate() {
        let block = &scores[g * replicates.len()..(g + 1) * replicates.len()];
        for (j, &m) in labelled.iter().enumerate() {
            for (k, &method) in config.methods.iter().enumerate() {
                for (&r, errors) in replicates.iter().zip(block) {
                    records.push(method_record(
                        ExperimentKind::Exp2,
                        method,
                        &config.train,
                        config.n,
                        m,
                        *angle,
                        r,
                        replicate_seed(config.base_seed, r),
                        errors[k][j],
                    ));
                }
            }
        }
    }
    Ok(records)
}
