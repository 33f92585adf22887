//! Linear classification of node embeddings and Monte Carlo estimation of
//! the resulting test error.

mod linear;
mod pipeline;

pub use linear::{error_rate, evaluate, fit_linear, LinearClassifier};
pub use pipeline::{
    embedding_error, monte_carlo, monte_carlo_with, pipeline_error, replicate_seed, sample_replicate, ErrorEstimate,
    Method, Replicate, Task,
};
