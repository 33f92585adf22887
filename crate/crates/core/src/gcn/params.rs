use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// A fixed collection of weight matrices, so the optimiser and the gradient
/// check can treat both models uniformly. Gradients use the same type.
pub trait ParamSet: Clone {
    fn tensors(&self) -> Vec<&DMatrix<f64>>;
    fn tensors_mut(&mut self) -> Vec<&mut DMatrix<f64>>;

    fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            t.fill(0.0);
        }
        out
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Weights of the variational graph auto-encoder: a shared first layer and
/// separate second layers for the mean and the log standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct VgaeParams {
    pub w0: DMatrix<f64>,
    pub w1_mu: DMatrix<f64>,
    pub w1_sigma: DMatrix<f64>,
}

impl VgaeParams {
    pub fn zeros(n: usize, hidden: usize, out_dim: usize) -> Self {
        Self {
            w0: DMatrix::zeros(n, hidden),
            w1_mu: DMatrix::zeros(hidden, out_dim),
            w1_sigma: DMatrix::zeros(hidden, out_dim),
        }
    }

    pub fn glorot<R: Rng + ?Sized>(n: usize, hidden: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            w0: glorot_uniform(n, hidden, rng),
            w1_mu: glorot_uniform(hidden, out_dim, rng),
            w1_sigma: glorot_uniform(hidden, out_dim, rng),
        }
    }

    pub fn n(&self) -> usize {
        self.w0.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w0.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w1_mu.ncols()
    }

    pub fn check_shapes(&self, n: usize) -> Result<()> {
        let h = self.hidden();
        let ok = self.w0.nrows() == n && self.w1_mu.nrows() == h && self.w1_sigma.shape() == self.w1_mu.shape();
        if !ok {
            return Err(Error::Contract(format!(
                "VGAE weights {:?}/{:?}/{:?} do not fit a {n}-node graph",
                self.w0.shape(),
                self.w1_mu.shape(),
                self.w1_sigma.shape()
            )));
        }
        Ok(())
    }
}

impl ParamSet for VgaeParams {
    fn tensors(&self) -> Vec<&DMatrix<f64>> {
        vec![&self.w0, &self.w1_mu, &self.w1_sigma]
    }

    fn tensors_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        vec![&mut self.w0, &mut self.w1_mu, &mut self.w1_sigma]
    }
}

/// Weights of the semisupervised classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiGcnParams {
    pub w0: DMatrix<f64>,
    pub w1: DMatrix<f64>,
}

impl SemiGcnParams {
    pub fn glorot<R: Rng + ?Sized>(n: usize, hidden: usize, classes: usize, rng: &mut R) -> Self {
        Self {
            w0: glorot_uniform(n, hidden, rng),
            w1: glorot_uniform(hidden, classes, rng),
        }
    }

    pub fn classes(&self) -> usize {
        self.w1.ncols()
    }

    pub fn check_shapes(&self, n: usize) -> Result<()> {
        if self.w0.nrows() != n || self.w1.nrows() != self.w0.ncols() {
            return Err(Error::Contract(format!(
                "GCN weights {:?}/{:?} do not fit a {n}-node graph",
                self.w0.shape(),
                self.w1.shape()
            )));
        }
        Ok(())
    }
}

impl ParamSet for SemiGcnParams {
    fn tensors(&self) -> Vec<&DMatrix<f64>> {
        vec![&self.w0, &self.w1]
    }

    fn tensors_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        vec![&mut self.w0, &mut self.w1]
    }
}

/// Uniform on `±sqrt(6 / (rows + cols))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..=limit))
}
