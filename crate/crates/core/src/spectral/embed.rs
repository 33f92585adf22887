use std::fmt;

use nalgebra::DMatrix;

use super::eigen::eigh_top;
use crate::error::{Error, Result};
use crate::latent::Graph;

/// How an embedding was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingMethod {
    Ase,
    GcnUnsup,
    GcnSemisup,
}

impl EmbeddingMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ase => "ase",
            Self::GcnUnsup => "gcn-unsup",
            Self::GcnSemisup => "gcn-semisup",
        }
    }
}

impl fmt::Display for EmbeddingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An `n × dim` node embedding; row `i` embeds node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub matrix: DMatrix<f64>,
    pub method: EmbeddingMethod,
}

impl Embedding {
    pub fn new(matrix: DMatrix<f64>, method: EmbeddingMethod) -> Result<Self> {
        if matrix.ncols() == 0 {
            return Err(Error::Parameter("embedding needs at least one dimension".into()));
        }
        Ok(Self { matrix, method })
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Leading `dim` columns, for nested embeddings (e.g. one- and
    /// two-dimensional ASE from one decomposition).
    pub fn truncated(&self, dim: usize) -> Result<Self> {
        if dim == 0 || dim > self.dim() {
            return Err(Error::Parameter(format!(
                "cannot truncate a {}-dimensional embedding to {dim}",
                self.dim()
            )));
        }
        Ok(Self {
            matrix: self.matrix.columns(0, dim).into_owned(),
            method: self.method,
        })
    }

    /// Rows `range` as a standalone matrix.
    pub fn rows(&self, start: usize, count: usize) -> DMatrix<f64> {
        self.matrix.rows(start, count).into_owned()
    }
}

/// Adjacency spectral embedding: the `dim` algebraically largest eigenpairs
/// of the adjacency matrix, each eigenvector scaled by `|λ|^{1/2}`.
pub fn ase(graph: &Graph, dim: usize) -> Result<Embedding> {
    let n = graph.n();
    if dim == 0 || dim > n {
        return Err(Error::Parameter(format!(
            "embedding dimension must lie in [1, {n}], got {dim}"
        )));
    }
    let eig = eigh_top(&graph.adjacency_matrix(), dim)?;
    let mut matrix = eig.vectors;
    for (k, lambda) in eig.values.iter().enumerate() {
        matrix.column_mut(k).scale_mut(lambda.abs().sqrt());
    }
    Embedding::new(matrix, EmbeddingMethod::Ase)
}

/// `D^{-1/2} (A + I) D^{-1/2}` with `D` the degree matrix of `A + I`.
pub fn normalized_adjacency(graph: &Graph) -> DMatrix<f64> {
    let n = graph.n();
    let inv_sqrt: Vec<f64> = graph.degrees().iter().map(|&d| 1.0 / ((d + 1) as f64).sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j || graph.has_edge(i, j) {
            inv_sqrt[i] * inv_sqrt[j]
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent::sample_rdpg;
    use crate::rng::{stream_rng, Stream};
    use crate::spectral::{eigh_symmetric, eigvalsh};
    use proptest::prelude::*;

    #[test]
    fn empty_graph_embeds_to_zero() {
        let e = ase(&Graph::empty(5), 1).unwrap();
        assert!(e.matrix.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn complete_graph_k4() {
        let e = ase(&Graph::complete(4), 1).unwrap();
        let expected = 3f64.sqrt() * 0.5;
        assert!(e.matrix.iter().all(|&v| (v - expected).abs() < 1e-12));
        assert!((expected - 0.8660).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(matches!(ase(&Graph::empty(3), 0), Err(Error::Parameter(_))));
        assert!(matches!(ase(&Graph::empty(3), 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn two_point_rank_two_attains_eckart_young_bound() {
        // Two latent values; the sampled adjacency is generic, so compare
        // against the optimal rank-2 approximation error from the full spectrum.
        let n = 80;
        let positions: Vec<[f64; 2]> = (0..n)
            .map(|i| if i % 2 == 0 { [0.8, 0.1] } else { [0.2, 0.6] })
            .collect();
        let g = sample_rdpg(&positions, &mut stream_rng(3, Stream::Fixture)).unwrap();
        let a = g.adjacency_matrix();
        let e = ase(&g, 2).unwrap();
        let recon_err = (&e.matrix * e.matrix.transpose() - &a).norm();
        let full = eigh_symmetric(&a).unwrap();
        let mut best = a.clone();
        for k in 0..2 {
            let u = full.vectors.column(k);
            best -= u * u.transpose() * full.values[k];
        }
        assert!(recon_err <= best.norm() + 1e-9, "{recon_err} vs {}", best.norm());
    }

    #[test]
    fn normalized_adjacency_examples() {
        assert_eq!(normalized_adjacency(&Graph::empty(3)), DMatrix::identity(3, 3));
        let pair = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(normalized_adjacency(&pair).iter().all(|&v| (v - 0.5).abs() < 1e-15));
        // 6-cycle is 2-regular: rows sum to one.
        let cycle = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        let na = normalized_adjacency(&cycle);
        for i in 0..6 {
            assert!((na.row(i).sum() - 1.0).abs() < 1e-15);
        }
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..24, any::<u64>()).prop_map(|(n, seed)| {
            let positions: Vec<[f64; 2]> = (0..n).map(|i| [0.3 + 0.02 * (i % 7) as f64, 0.4]).collect();
            sample_rdpg(&positions, &mut stream_rng(seed, Stream::Fixture)).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ase_columns_are_orthogonal(g in arb_graph(), dim in 1usize..3) {
            let e = ase(&g, dim).unwrap();
            for a in 0..dim {
                for b in (a + 1)..dim {
                    prop_assert!(e.matrix.column(a).dot(&e.matrix.column(b)).abs() <= 1e-10);
                }
            }
        }

        #[test]
        fn normalized_adjacency_is_symmetric_contraction(g in arb_graph()) {
            let na = normalized_adjacency(&g);
            prop_assert_eq!(&na, &na.transpose());
            let radius = eigvalsh(&na).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(radius <= 1.0 + 1e-10);
        }
    }
}
