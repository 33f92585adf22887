//! Hyperparameter search for the two GCN variants (exp3).
//!
//! The labelled prefix is split into a training part and a validation part
//! (the last `round(fraction · m)` labelled nodes). Every (hidden, lr)
//! candidate is trained from several initialisations; the candidate with the
//! best mean accuracy — on the training part by default — is selected, and
//! its test error (averaged over the initialisations) is reported next to
//! the unsearched defaults trained on all `m` labels.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::campaign::method_record;
use super::config::{validation_split, ExperimentConfig, ExperimentKind, SelectOn};
use super::records::ResultRecord;
use super::{geometry_for_gap, run_units};
use crate::classify::{embedding_error, error_rate, evaluate, fit_linear, replicate_seed, sample_replicate, Method};
use crate::error::{Error, Result};
use crate::gcn::{fit_semisupervised, train_vgae, Activation, TrainConfig};
use crate::latent::LatentModel;
use crate::rng::derive_seed;
use crate::spectral::{ase, normalized_adjacency};

/// Method tag suffix of searched results.
pub const SEARCH_SUFFIX: &str = "-search";

/// Which GCN variant is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SearchTarget {
    Unsupervised,
    Semisupervised,
}

impl SearchTarget {
    pub fn tag(self) -> String {
        let base = match self {
            Self::Unsupervised => "gcn-unsup",
            Self::Semisupervised => "gcn-semisup",
        };
        format!("{base}{SEARCH_SUFFIX}")
    }
}

/// Accuracies and test error of one trained candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub test_error: f64,
}

/// Selected (hidden, lr) of one search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub hidden: usize,
    pub learning_rate: f64,
    /// Mean selection accuracy over initialisations.
    pub accuracy: f64,
    /// Mean test error over initialisations.
    pub test_error: f64,
}

/// Labelled prefix split into `[0, train)` and `[train, m)`, test `[m, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub train: usize,
    pub m: usize,
    pub n: usize,
}

fn score_embedding(embedding: &DMatrix<f64>, labels: &[u8], split: Split) -> Result<CandidateScore> {
    let rows = |a: usize, b: usize| embedding.rows(a, b - a).into_owned();
    let classifier = fit_linear(&rows(0, split.train), &labels[..split.train])?;
    Ok(CandidateScore {
        train_accuracy: 1.0 - evaluate(&classifier, &rows(0, split.train), &labels[..split.train])?,
        validation_accuracy: 1.0 - evaluate(&classifier, &rows(split.train, split.m), &labels[split.train..split.m])?,
        test_error: evaluate(&classifier, &rows(split.m, split.n), &labels[split.m..])?,
    })
}

fn score_predictions(predicted: &[u8], labels: &[u8], split: Split) -> Result<CandidateScore> {
    let (t, m) = (split.train, split.m);
    Ok(CandidateScore {
        train_accuracy: 1.0 - error_rate(&predicted[..t], &labels[..t])?,
        validation_accuracy: 1.0 - error_rate(&predicted[t..m], &labels[t..m])?,
        test_error: error_rate(&predicted[m..], &labels[m..])?,
    })
}

/// Grid search on one replicate. Candidates are visited hidden-major; ties
/// keep the earlier candidate. Initialisation `i` trains with seed
/// `derive_seed(seed, i)`, shared by all candidates.
#[allow(clippy::too_many_arguments)]
pub fn search_replicate(
    target: SearchTarget,
    graph: &crate::latent::Graph,
    a_norm: &DMatrix<f64>,
    labels: &[u8],
    split: Split,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Selection> {
    let mut best: Option<Selection> = None;
    for &hidden in &config.search_hidden {
        for &learning_rate in &config.search_lr {
            let mut accuracy = 0.0;
            let mut test_error = 0.0;
            for init in 0..config.search_inits {
                let train = TrainConfig {
                    hidden,
                    learning_rate,
                    activation: Activation::Relu,
                    seed: derive_seed(seed, init as u64),
                    ..config.train.clone()
                };
                let score = match target {
                    SearchTarget::Unsupervised => {
                        let run = train_vgae(graph, a_norm, &train)?;
                        score_embedding(&run.embedding.matrix, labels, split)?
                    }
                    SearchTarget::Semisupervised => {
                        let run = fit_semisupervised(a_norm, &labels[..split.train], &train)?;
                        score_predictions(&run.predictions, labels, split)?
                    }
                };
                accuracy += match config.select_on {
                    SelectOn::Training => score.train_accuracy,
                    SelectOn::Validation => score.validation_accuracy,
                };
                test_error += score.test_error;
            }
            let inits = config.search_inits as f64;
            let candidate = Selection {
                hidden,
                learning_rate,
                accuracy: accuracy / inits,
                test_error: test_error / inits,
            };
            if best.is_none_or(|b| candidate.accuracy > b.accuracy) {
                best = Some(candidate);
            }
        }
    }
    best.ok_or_else(|| Error::Parameter("empty search grid".into()))
}

/// Results of exp3: one record per (geometry, method, replicate) and the
/// selections behind the searched rows.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub records: Vec<ResultRecord>,
    /// `(gap, target, replicate, selection)`.
    pub selections: Vec<(f64, SearchTarget, usize, Selection)>,
}

impl SearchOutcome {
    /// Most frequently selected (hidden, lr) per geometry and method; ties
    /// go to the earlier grid candidate.
    pub fn best_configs(&self, config: &ExperimentConfig) -> Vec<(f64, SearchTarget, usize, f64, usize, usize)> {
        let grid_index = |s: &Selection| {
            let h = config.search_hidden.iter().position(|&h| h == s.hidden).unwrap_or(0);
            let l = config.search_lr.iter().position(|&l| l == s.learning_rate).unwrap_or(0);
            (h, l)
        };
        let mut tallies: BTreeMap<(usize, SearchTarget), BTreeMap<(usize, usize), usize>> = BTreeMap::new();
        let mut gaps = Vec::new();
        for (gap, target, _, sel) in &self.selections {
            let g = match gaps.iter().position(|x| x == gap) {
                Some(g) => g,
                None => {
                    gaps.push(*gap);
                    gaps.len() - 1
                }
            };
            *tallies
                .entry((g, *target))
                .or_default()
                .entry(grid_index(sel))
                .or_default() += 1;
        }
        tallies
            .into_iter()
            .map(|((g, target), counts)| {
                let total = counts.values().sum();
                let (&(h, l), &votes) = counts
                    .iter()
                    .fold(None, |acc: Option<(&(usize, usize), &usize)>, kv| match acc {
                        Some(a) if a.1 >= kv.1 => Some(a),
                        _ => Some(kv),
                    })
                    .expect("every tally has a vote");
                (
                    gaps[g],
                    target,
                    config.search_hidden[h],
                    config.search_lr[l],
                    votes,
                    total,
                )
            })
            .collect()
    }

    /// Human-readable best-configuration report.
    pub fn report(&self, config: &ExperimentConfig) -> String {
        let mut out = format!(
            "best configuration per geometry (selected on {} accuracy, {} initialisations)\n",
            match config.select_on {
                SelectOn::Training => "training",
                SelectOn::Validation => "validation",
            },
            config.search_inits
        );
        for (gap, target, hidden, lr, votes, total) in self.best_configs(config) {
            let _ = writeln!(
                out,
                "gap={gap:.6} {}: hidden={hidden} lr={lr} (chosen in {votes}/{total} replicates)",
                target.tag()
            );
        }
        out
    }
}

/// Runs exp3 on the configured geometries.
pub fn run_exp3(config: &ExperimentConfig, replicates: &[usize]) -> Result<SearchOutcome> {
    let (train_part, _) = validation_split(config.m, config.validation_fraction)?;
    if train_part == 0 {
        return Err(Error::Parameter(format!(
            "validation split leaves no training nodes (m={})",
            config.m
        )));
    }
    let split = Split {
        train: train_part,
        m: config.m,
        n: config.n,
    };
    let models: Vec<(LatentModel, f64)> = config
        .gaps
        .iter()
        .map(|&g| geometry_for_gap(g))
        .collect::<Result<_>>()?;
    let targets: Vec<SearchTarget> = [
        (
            Method::GcnUnsup {
                activation: Activation::Relu,
            },
            SearchTarget::Unsupervised,
        ),
        (
            Method::GcnSemisup {
                activation: Activation::Relu,
            },
            SearchTarget::Semisupervised,
        ),
    ]
    .into_iter()
    .filter(|(m, _)| config.methods.contains(m))
    .map(|(_, t)| t)
    .collect();
    let units: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|g| replicates.iter().map(move |&r| (g, r)))
        .collect();
    let outcomes = run_units(
        &units,
        |&(_, r)| replicate_seed(config.base_seed, r),
        |&(g, r)| {
            let seed = replicate_seed(config.base_seed, r);
            let rep = sample_replicate(&models[g].0, config.n, seed)?;
            let labels = &rep.sample.y;
            let a_norm = normalized_adjacency(&rep.graph);
            let train = TrainConfig {
                seed,
                ..config.train.clone()
            };
            let baselines = config
                .methods
                .iter()
                .map(|&method| match method {
                    Method::Ase { dim } => embedding_error(&ase(&rep.graph, dim)?.matrix, labels, config.m),
                    Method::GcnUnsup { activation } => {
                        let run = train_vgae(
                            &rep.graph,
                            &a_norm,
                            &TrainConfig {
                                activation,
                                ..train.clone()
                            },
                        )?;
                        embedding_error(&run.embedding.matrix, labels, config.m)
                    }
                    Method::GcnSemisup { activation } => {
                        let run = fit_semisupervised(
                            &a_norm,
                            &labels[..config.m],
                            &TrainConfig {
                                activation,
                                ..train.clone()
                            },
                        )?;
                        error_rate(&run.predictions[config.m..], &labels[config.m..])
                    }
                    Method::ErmLatent => Err(Error::Contract("erm-latent is not part of the search study".into())),
                })
                .collect::<Result<Vec<f64>>>()?;
            let searched = targets
                .iter()
                .map(|&t| search_replicate(t, &rep.graph, &a_norm, labels, split, config, seed))
                .collect::<Result<Vec<Selection>>>()?;
            Ok((baselines, searched))
        },
    )?;
    let mut records = Vec::new();
    let mut selections = Vec::new();
    for (g, (_, angle)) in models.iter().enumerate() {
        let block = &outcomes[g * replicates.len()..(g + 1) * replicates.len()];
        for (k, &method) in config.methods.iter().enumerate() {
            for (&r, (baselines, _)) in replicates.iter().zip(block) {
                let seed = replicate_seed(config.base_seed, r);
                records.push(method_record(
                    ExperimentKind::Exp3,
                    method,
                    &config.train,
                    config.n,
                    config.m,
                    *angle,
                    r,
                    seed,
                    baselines[k],
                ));
            }
        }
        for (k, &target) in targets.iter().enumerate() {
            for (&r, (_, searched)) in replicates.iter().zip(block) {
                let sel = searched[k];
                records.push(ResultRecord {
                    experiment: ExperimentKind::Exp3.as_str().into(),
                    method: target.tag(),
                    n: config.n,
                    m: config.m,
                    angle_diff_rad: Some(*angle),
                    hidden: Some(sel.hidden),
                    lr: Some(sel.learning_rate),
                    activation: Some(Activation::Relu),
                    replicate: r,
                    seed: replicate_seed(config.base_seed, r),
                    test_error: sel.test_error,
                });
                selections.push((*angle, target, r, sel));
            }
        }
    }
    Ok(SearchOutcome { records, selections })
}
