//! Eigendecomposition, adjacency spectral embedding, the renormalised
//! adjacency used by graph convolutions, Procrustes alignment and
//! eigenvector-angle diagnostics.

mod angles;
mod eigen;
mod embed;
mod procrustes;

pub use angles::{angle_table, angle_table_against, principal_angle, AngleTable, DEGENERACY_TOL};
pub use eigen::{eigh_symmetric, eigh_top, eigvalsh, EigenDecomposition};
pub use embed::{ase, normalized_adjacency, Embedding, EmbeddingMethod};
pub use procrustes::{procrustes_align, ProcrustesAlignment};
