use nalgebra::DMatrix;

use super::eigen::{eigh_top, EigenDecomposition};
use super::embed::Embedding;
use crate::error::{Error, Result};
use crate::latent::Graph;

/// Eigenvalues closer than this are treated as coincident.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Angles in degrees between adjacency eigenvectors (rows) and embedding
/// columns (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleTable {
    pub degrees: DMatrix<f64>,
    /// Eigenvalues of the reported eigenvectors, descending.
    pub eigenvalues: Vec<f64>,
    /// Some reported eigenvalue is (numerically) repeated, so the
    /// corresponding eigenvectors are one arbitrary basis of the eigenspace.
    pub degenerate: bool,
}

/// Angle in `[0, 90]` degrees between the lines spanned by `u` and `v`.
pub fn principal_angle(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Parameter(format!(
            "vectors have different lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Parameter("principal angle of a zero vector".into()));
    }
    let inner: f64 = u.iter().zip(v).map(|(a, b)| (a / nu) * (b / nv)).sum();
    Ok(inner.abs().min(1.0).acos().to_degrees())
}

fn column(m: &DMatrix<f64>, k: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[k * n..(k + 1) * n]
}

/// Angles between the `top_k` leading adjacency eigenvectors and each
/// embedding column.
pub fn angle_table(embedding: &Embedding, graph: &Graph, top_k: usize) -> Result<AngleTable> {
    let n = graph.n();
    if top_k == 0 || top_k > n {
        return Err(Error::Parameter(format!("top_k must lie in [1, {n}], got {top_k}")));
    }
    // One extra pair tells whether the last reported eigenvalue is repeated.
    let wanted = (top_k + 1).min(n);
    let eig = eigh_top(&graph.adjacency_matrix(), wanted)?;
    angle_table_against(embedding, &eig, top_k)
}

/// [`angle_table`] against a precomputed (possibly partial) decomposition.
pub fn angle_table_against(embedding: &Embedding, eig: &EigenDecomposition, top_k: usize) -> Result<AngleTable> {
    if embedding.n() != eig.vectors.nrows() {
        return Err(Error::Parameter(format!(
            "embedding has {} rows but eigenvectors have {}",
            embedding.n(),
            eig.vectors.nrows()
        )));
    }
    if top_k == 0 || top_k > eig.len() {
        return Err(Error::Parameter(format!(
            "top_k must lie in [1, {}], got {top_k}",
            eig.len()
        )));
    }
    for k in 0..embedding.dim() {
        if column(&embedding.matrix, k).iter().all(|&v| v == 0.0) {
            return Err(Error::Parameter(format!("embedding column {k} is all zero")));
        }
    }
    let mut degrees = DMatrix::zeros(top_k, embedding.dim());
    for j in 0..top_k {
        for k in 0..embedding.dim() {
            degrees[(j, k)] = principal_angle(column(&eig.vectors, j), column(&embedding.matrix, k))?;
        }
    }
    let checked = (top_k + 1).min(eig.len());
    let degenerate = eig.values[..checked]
        .windows(2)
        .any(|w| (w[0] - w[1]).abs() <= DEGENERACY_TOL);
    Ok(AngleTable {
        degrees,
        eigenvalues: eig.values[..top_k].to_vec(),
        degenerate,
    })
}
