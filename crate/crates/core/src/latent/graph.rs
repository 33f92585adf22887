use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Inner products this far outside `[0, 1]` are treated as rounding and clamped.
const PROBABILITY_SLACK: f64 = 1e-12;

/// Undirected simple graph stored as a dense symmetric 0/1 adjacency matrix
/// with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<u8>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adjacency: vec![0; n * n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.adjacency[i * n + j] = 1;
                }
            }
        }
        g
    }

    /// Builds a graph from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Parameter(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::Parameter(format!("self-loop at node {i}")));
            }
            g.set_edge(i, j);
        }
        Ok(g)
    }

    /// Wraps a row-major adjacency buffer after checking it is binary,
    /// symmetric and hollow.
    pub fn from_adjacency(n: usize, adjacency: Vec<u8>) -> Result<Self> {
        if adjacency.len() != n * n {
            return Err(Error::Contract(format!(
                "adjacency has {} entries, expected {}",
                adjacency.len(),
                n * n
            )));
        }
        for i in 0..n {
            if adjacency[i * n + i] != 0 {
                return Err(Error::Contract(format!("non-zero diagonal at node {i}")));
            }
            for j in 0..n {
                let a = adjacency[i * n + j];
                if a > 1 {
                    return Err(Error::Contract(format!("non-binary entry at ({i}, {j})")));
                }
                if a != adjacency[j * n + i] {
                    return Err(Error::Contract(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, adjacency })
    }

    fn set_edge(&mut self, i: usize, j: usize) {
        self.adjacency[i * self.n + j] = 1;
        self.adjacency[j * self.n + i] = 1;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j] != 0
    }

    /// Row `i` of the adjacency matrix.
    pub fn row(&self, i: usize) -> &[u8] {
        &self.adjacency[i * self.n..(i + 1) * self.n]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|&a| a as usize).sum())
            .collect()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|&a| a as usize).sum::<usize>() / 2
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| f64::from(self.adjacency[i * self.n + j]))
    }
}

/// Samples `A_ij ~ Bernoulli(x_i . x_j)` independently for `i < j`.
///
/// Edges are drawn in row-major order of the upper triangle, one uniform per
/// pair, so the graph is a pure function of the positions and the generator.
pub fn sample_rdpg<R: Rng + ?Sized>(positions: &[[f64; 2]], rng: &mut R) -> Result<Graph> {
    let n = positions.len();
    let mut g = Graph::empty(n);
    for i in 0..n {
        let xi = positions[i];
        for (j, xj) in positions.iter().enumerate().skip(i + 1) {
            let p = xi[0] * xj[0] + xi[1] * xj[1];
            // also rejects NaN
            if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
                return Err(Error::InvalidProbability {
                    context: format!("inner product of latent positions for nodes ({i}, {j})"),
                    value: p,
                });
            }
            let p = p.clamp(0.0, 1.0);
            if rng.random::<f64>() < p {
                g.set_edge(i, j);
            }
        }
    }
    Ok(g)
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn sample_erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability {
            context: "Erdős–Rényi edge probability".into(),
            value: p,
        });
    }
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                g.set_edge(i, j);
            }
        }
    }
    Ok(g)
}
