//! Numerical laboratory for a spectral failure mode of unsupervised graph
//! convolutional embeddings.
//!
//! Graphs are sampled from a random dot product model whose latent positions
//! lie on a planar segment (`latent`). When the segment is orthogonal to the
//! mean position, the leading adjacency eigenvector carries no class signal:
//! adjacency spectral embedding into two dimensions (`spectral`) still
//! classifies well, while a variational graph auto-encoder (`gcn`) recovers
//! only the leading eigenvector. `classify` and `experiments` run the Monte
//! Carlo comparisons and write result tables.

pub mod classify;
pub mod error;
pub mod experiments;
pub mod gcn;
pub mod latent;
pub mod quadrature;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
