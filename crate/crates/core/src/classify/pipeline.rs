use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::linear::{evaluate, fit_linear};
use crate::error::{Error, Result};
use crate::gcn::{fit_semisupervised, train_vgae, Activation, TrainConfig};
use crate::latent::{erm_threshold, sample_latent, sample_rdpg, Graph, LatentModel, LatentSample};
use crate::rng::{stream_rng, Stream};
use crate::spectral::{ase, normalized_adjacency};

/// A way of turning one sampled graph into test-set predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Empirical-risk threshold on the latent coordinate itself.
    ErmLatent,
    /// Adjacency spectral embedding of the given dimension.
    Ase { dim: usize },
    /// Variational auto-encoder means, dimension from the training config.
    GcnUnsup { activation: Activation },
    /// End-to-end semisupervised GCN.
    GcnSemisup { activation: Activation },
}

impl Method {
    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let linear = |a: &Activation| matches!(a, Activation::Identity);
        match self {
            Self::ErmLatent => f.write_str("erm-latent"),
            Self::Ase { dim } => write!(f, "ase-{dim}"),
            Self::GcnUnsup { activation } if linear(activation) => f.write_str("gcn-unsup-linear"),
            Self::GcnUnsup { .. } => f.write_str("gcn-unsup-relu"),
            Self::GcnSemisup { activation } if linear(activation) => f.write_str("gcn-semisup-linear"),
            Self::GcnSemisup { .. } => f.write_str("gcn-semisup"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let method = match s {
            "erm-latent" => Self::ErmLatent,
            "gcn-unsup-relu" | "gcn-unsup" => Self::GcnUnsup {
                activation: Activation::Relu,
            },
            "gcn-unsup-linear" => Self::GcnUnsup {
                activation: Activation::Identity,
            },
            "gcn-semisup" | "gcn-semisup-relu" => Self::GcnSemisup {
                activation: Activation::Relu,
            },
            "gcn-semisup-linear" => Self::GcnSemisup {
                activation: Activation::Identity,
            },
            other => match other.strip_prefix("ase-").map(str::parse::<usize>) {
                Some(Ok(dim)) if dim >= 1 => Self::Ase { dim },
                _ => return Err(Error::Parameter(format!("unknown method '{other}'"))),
            },
        };
        Ok(method)
    }
}

/// Monte Carlo mean of per-replicate test errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub mean_error: f64,
    /// Sample standard deviation over `√replicates`.
    pub std_error: f64,
    pub replicates: usize,
}

impl ErrorEstimate {
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        let r = errors.len();
        if r == 0 {
            return Err(Error::Parameter("no replicate errors to aggregate".into()));
        }
        // Welford's recursion: exact for constant inputs.
        let mut mean = 0.0;
        let mut squares = 0.0;
        for (k, &e) in errors.iter().enumerate() {
            let delta = e - mean;
            mean += delta / (k + 1) as f64;
            squares += delta * (e - mean);
        }
        let std_error = if r > 1 {
            (squares / (r - 1) as f64 / r as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean_error: mean,
            std_error,
            replicates: r,
        })
    }
}

/// One sampled data set: latent positions with labels, and the graph.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub sample: LatentSample,
    pub graph: Graph,
}

/// Seed of replicate `index` of a campaign.
pub fn replicate_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

/// Latent sample and graph for one seed (independent streams).
pub fn sample_replicate(model: &LatentModel, n: usize, seed: u64) -> Result<Replicate> {
    let sample = sample_latent(n, model, &mut stream_rng(seed, Stream::Latent))?;
    let graph = sample_rdpg(&sample.x, &mut stream_rng(seed, Stream::Graph))?;
    Ok(Replicate { sample, graph })
}

fn check_split(n: usize, m: usize) -> Result<()> {
    if m == 0 || m >= n {
        return Err(Error::Parameter(format!(
            "labelled count m must satisfy 1 <= m < n, got m={m}, n={n}"
        )));
    }
    Ok(())
}

/// Fits the linear classifier on rows `0..m` and returns its error on the rest.
pub fn embedding_error(embedding: &DMatrix<f64>, labels: &[u8], m: usize) -> Result<f64> {
    let n = embedding.nrows();
    check_split(n, m)?;
    if labels.len() != n {
        return Err(Error::Parameter(format!(
            "{n} embedding rows but {} labels",
            labels.len()
        )));
    }
    let classifier = fit_linear(&embedding.rows(0, m).into_owned(), &labels[..m])?;
    evaluate(&classifier, &embedding.rows(m, n - m).into_owned(), &labels[m..])
}

/// Test error of `method` on one replicate, training on the first `m` nodes.
pub fn pipeline_error(
    sample: &LatentSample,
    graph: &Graph,
    method: Method,
    train: &TrainConfig,
    m: usize,
) -> Result<f64> {
    let n = sample.len();
    if graph.n() != n {
        return Err(Error::Parameter(format!(
            "sample has {n} nodes, graph has {}",
            graph.n()
        )));
    }
    check_split(n, m)?;
    let labels = &sample.y;
    match method {
        Method::ErmLatent => {
            let rule = erm_threshold(&sample.z[..m], &labels[..m]);
            Ok(rule.error_rate(&sample.z[m..], &labels[m..]))
        }
        Method::Ase { dim } => embedding_error(&ase(graph, dim)?.matrix, labels, m),
        Method::GcnUnsup { activation } => {
            let config = TrainConfig {
                activation,
                ..train.clone()
            };
            let run = train_vgae(graph, &normalized_adjacency(graph), &config)?;
            embedding_error(&run.embedding.matrix, labels, m)
        }
        Method::GcnSemisup { activation } => {
            let config = TrainConfig {
                activation,
                ..train.clone()
            };
            let run = fit_semisupervised(&normalized_adjacency(graph), &labels[..m], &config)?;
            crate::classify::error_rate(&run.predictions[m..], &labels[m..])
        }
    }
}

/// One Monte Carlo campaign: a method applied to fresh samples of a model.
#[derive(Debug, Clone)]
pub struct Task {
    pub model: LatentModel,
    pub n: usize,
    pub m: usize,
    pub method: Method,
    /// Training settings for the GCN methods; the seed is replaced by the
    /// replicate seed.
    pub train: TrainConfig,
}

/// Runs `replicates` replicates of `task` with seeds `base_seed + r`.
pub fn monte_carlo(task: &Task, replicates: usize, base_seed: u64) -> Result<ErrorEstimate> {
    check_split(task.n, task.m)?;
    monte_carlo_with(replicates, base_seed, |seed| {
        let rep = sample_replicate(&task.model, task.n, seed)?;
        let train = TrainConfig {
            seed,
            ..task.train.clone()
        };
        pipeline_error(&rep.sample, &rep.graph, task.method, &train, task.m)
    })
}

/// Evaluates `replicate(seed)` for every replicate seed in parallel and
/// aggregates in replicate order. The first failing replicate (by index)
/// is reported with its seed.
pub fn monte_carlo_with<F>(replicates: usize, base_seed: u64, replicate: F) -> Result<ErrorEstimate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if replicates == 0 {
        return Err(Error::Parameter("replicates must be at least 1".into()));
    }
    let outcomes: Vec<(u64, Result<f64>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(base_seed, r);
            (seed, replicate(seed))
        })
        .collect();
    let mut errors = Vec::with_capacity(replicates);
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(e) => errors.push(e),
            Err(source) => {
                return Err(Error::Replicate {
                    seed,
                    source: Box::new(source),
                })
            }
        }
    }
    ErrorEstimate::from_errors(&errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent::bayes_error;

    #[test]
    fn method_tags_round_trip() {
        let methods = [
            Method::ErmLatent,
            Method::Ase { dim: 1 },
            Method::Ase { dim: 2 },
            Method::GcnUnsup {
                activation: Activation::Relu,
            },
            Method::GcnUnsup {
                activation: Activation::Identity,
            },
            Method::GcnSemisup {
                activation: Activation::Relu,
            },
            Method::GcnSemisup {
                activation: Activation::Identity,
            },
        ];
        for m in methods {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("ase-0".parse::<Method>().is_err());
        assert!("svm".parse::<Method>().is_err());
    }

    #[test]
    fn single_replicate_has_zero_standard_error() {
        let est = ErrorEstimate::from_errors(&[0.3]).unwrap();
        assert_eq!((est.mean_error, est.std_error, est.replicates), (0.3, 0.0, 1));
    }

    #[test]
    fn constant_stub_aggregates_exactly() {
        let est = monte_carlo_with(17, 5, |_| Ok(0.3)).unwrap();
        assert_eq!((est.mean_error, est.std_error, est.replicates), (0.3, 0.0, 17));
    }

    #[test]
    fn standard_error_uses_sample_deviation() {
        let est = ErrorEstimate::from_errors(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let sd = (0.05f64 / 3.0).sqrt();
        assert!((est.std_error - sd / 2.0).abs() < 1e-15);
        assert!((est.mean_error - 0.25).abs() < 1e-15);
    }

    #[test]
    fn failing_replicate_reports_lowest_seed() {
        let err = monte_carlo_with(10, 100, |seed| {
            if seed >= 104 {
                Err(Error::Numerical("boom".into()))
            } else {
                Ok(0.0)
            }
        })
        .unwrap_err();
        match err {
            Error::Replicate { seed, .. } => assert_eq!(seed, 104),
            other => panic!("{other:?}"),
        }
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let run = || {
            monte_carlo_with(12, 9, |seed| {
                let rep = sample_replicate(&LatentModel::fig1_canonical(), 120, seed)?;
                pipeline_error(
                    &rep.sample,
                    &rep.graph,
                    Method::Ase { dim: 2 },
                    &TrainConfig::default(),
                    30,
                )
            })
            .unwrap()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(single, many);
    }

    #[test]
    fn single_class_training_slice_uses_constant_rule() {
        let mut rep = sample_replicate(&LatentModel::fig1_canonical(), 60, 3).unwrap();
        rep.sample.y[..10].iter_mut().for_each(|y| *y = 0);
        let err = pipeline_error(
            &rep.sample,
            &rep.graph,
            Method::Ase { dim: 2 },
            &TrainConfig::default(),
            10,
        )
        .unwrap();
        let ones = rep.sample.y[10..].iter().filter(|&&y| y == 1).count();
        assert_eq!(err, ones as f64 / 50.0);
    }

    #[test]
    fn erm_is_not_better_than_bayes() {
        let model = LatentModel::fig1_canonical();
        let task = Task {
            model,
            n: 1000,
            m: 100,
            method: Method::ErmLatent,
            train: TrainConfig::default(),
        };
        let est = monte_carlo(&task, 30, 0).unwrap();
        assert!(est.mean_error >= bayes_error(&model).unwrap() - 3.0 * est.std_error);
    }

    #[test]
    fn split_validation() {
        let rep = sample_replicate(&LatentModel::fig1_canonical(), 20, 1).unwrap();
        let cfg = TrainConfig::default();
        assert!(pipeline_error(&rep.sample, &rep.graph, Method::ErmLatent, &cfg, 0).is_err());
        assert!(pipeline_error(&rep.sample, &rep.graph, Method::ErmLatent, &cfg, 20).is_err());
    }
}
