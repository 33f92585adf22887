use nalgebra::DMatrix;

use super::eigen::eigh_symmetric;
use crate::error::{Error, Result};

/// Relative singular-value threshold below which the cross-product is
/// treated as rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProcrustesAlignment {
    /// Orthogonal `d × d` matrix minimising `‖source·W − target‖_F`.
    pub rotation: DMatrix<f64>,
    /// `source · rotation`.
    pub aligned: DMatrix<f64>,
    /// `‖aligned − target‖_F`.
    pub residual: f64,
    /// The cross-product `sourceᵀ·target` was rank deficient and the
    /// identity was used instead.
    pub degenerate: bool,
}

/// Orthogonal Procrustes via the polar factor of `M = sourceᵀ·target`:
/// with `MᵀM = V Σ² Vᵀ`, the minimiser is `W = M V Σ⁻¹ Vᵀ`.
pub fn procrustes_align(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<ProcrustesAlignment> {
    if source.shape() != target.shape() {
        return Err(Error::Parameter(format!(
            "Procrustes needs equal shapes, got {:?} and {:?}",
            source.shape(),
            target.shape()
        )));
    }
    let d = source.ncols();
    if d == 0 {
        return Err(Error::Parameter("Procrustes needs at least one column".into()));
    }
    let cross = source.transpose() * target;
    let gram = cross.transpose() * &cross;
    let eig = eigh_symmetric(&gram)?;
    let top = eig.values[0].max(0.0).sqrt();
    let bottom = eig.values[d - 1].max(0.0).sqrt();
    let degenerate = !(top > 0.0 && bottom > RANK_TOL * top);
    let rotation = if degenerate {
        DMatrix::identity(d, d)
    } else {
        let v = &eig.vectors;
        let inv_sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            eig.values.iter().map(|s| 1.0 / s.sqrt()),
        ));
        &cross * v * inv_sigma * v.transpose()
    };
    let aligned = source * &rotation;
    let residual = (&aligned - target).norm();
    Ok(ProcrustesAlignment {
        rotation,
        aligned,
        residual,
        degenerate,
    })
}
