//! The scale-rotate-translate latent position model.
//!
//! A scalar `Z` in `[0, 1]` is drawn from one of two Beta laws depending on
//! the class label, then mapped onto a line segment in the plane by
//! `srt(z) = R(r) (s z, 0)^T + t`. Nodes of a random dot product graph sit at
//! these positions.

mod distributions;
mod geometry;
mod graph;
mod reference;

pub use distributions::{sample_gamma, BetaShape};
pub use geometry::{
    angle_gap, support_interval, t_path, theta_e, theta_perp, translation_for_gap, validate_latent, validate_support,
    PathPoint, SUPPORT_TAIL,
};
pub use graph::{sample_erdos_renyi, sample_rdpg, Graph};
pub use reference::{bayes_error, bayes_predict, erm_threshold, Orientation, ThresholdClassifier};

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the canonical preset.
pub const FIG1_CANONICAL: &str = "fig1-canonical";

/// Scale, rotation and translation of the srt map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrtParams {
    pub scale: f64,
    /// Radians in `[0, 2π)`.
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl SrtParams {
    pub fn new(scale: f64, rotation: f64, translation: [f64; 2]) -> Result<Self> {
        let params = Self {
            scale,
            rotation,
            translation,
        };
        params.validate()?;
        Ok(params)
    }

    /// `(1.1, 53π/32, (0.13, 0.97))`.
    pub fn canonical() -> Self {
        Self {
            scale: 1.1,
            rotation: 53.0 * PI / 32.0,
            translation: [0.13, 0.97],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Parameter(format!("scale must be positive, got {}", self.scale)));
        }
        if !(0.0..2.0 * PI).contains(&self.rotation) {
            return Err(Error::Parameter(format!(
                "rotation must lie in [0, 2π), got {}",
                self.rotation
            )));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("translation must be finite".into()));
        }
        Ok(())
    }

    /// Unit direction of the support segment.
    pub fn direction(&self) -> [f64; 2] {
        [self.rotation.cos(), self.rotation.sin()]
    }

    pub fn with_translation(&self, translation: [f64; 2]) -> Self {
        Self { translation, ..*self }
    }
}

/// `R(r) (s z, 0)^T + t`.
pub fn srt_transform(z: f64, params: &SrtParams) -> [f64; 2] {
    let [c, s] = params.direction();
    let sz = params.scale * z;
    [params.translation[0] + sz * c, params.translation[1] + sz * s]
}

/// Joint law of `(X, Y)`: class-conditional Beta laws on `Z`, a class prior,
/// and the srt map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentModel {
    pub class0: BetaShape,
    pub class1: BetaShape,
    /// Probability of class 1.
    pub prior1: f64,
    pub srt: SrtParams,
}

impl LatentModel {
    pub fn new(class0: BetaShape, class1: BetaShape, prior1: f64, srt: SrtParams) -> Result<Self> {
        let model = Self {
            class0,
            class1,
            prior1,
            srt,
        };
        model.validate()?;
        Ok(model)
    }

    /// Beta(10, 3) vs Beta(4, 3), equal priors, canonical srt.
    pub fn fig1_canonical() -> Self {
        Self {
            class0: BetaShape { a: 10.0, b: 3.0 },
            class1: BetaShape { a: 4.0, b: 3.0 },
            prior1: 0.5,
            srt: SrtParams::canonical(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            FIG1_CANONICAL => Ok(Self::fig1_canonical()),
            other => Err(Error::Parameter(format!("unknown model preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.class0.validate()?;
        self.class1.validate()?;
        if !(0.0..=1.0).contains(&self.prior1) {
            return Err(Error::Parameter(format!(
                "prior1 must lie in [0, 1], got {}",
                self.prior1
            )));
        }
        self.srt.validate()
    }

    pub fn prior0(&self) -> f64 {
        1.0 - self.prior1
    }

    pub fn class_shape(&self, label: u8) -> BetaShape {
        if label == 0 {
            self.class0
        } else {
            self.class1
        }
    }

    /// `E[Z]` from the Beta means.
    pub fn mean_z(&self) -> f64 {
        self.prior0() * self.class0.mean() + self.prior1 * self.class1.mean()
    }

    /// `E[X] = srt(E[Z])`; the map is affine so expectation commutes with it.
    pub fn mean_position(&self) -> [f64; 2] {
        srt_transform(self.mean_z(), &self.srt)
    }

    /// Marginal density of `Z`.
    pub fn mixture_pdf(&self, z: f64) -> f64 {
        self.prior0() * self.class0.pdf(z) + self.prior1 * self.class1.pdf(z)
    }

    pub fn with_srt(&self, srt: SrtParams) -> Self {
        Self { srt, ..*self }
    }
}

/// One draw of `n` labelled latent positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    /// Pre-transform scalars.
    pub z: Vec<f64>,
    /// Positions `srt(z_i)`.
    pub x: Vec<[f64; 2]>,
    /// Labels in `{0, 1}`.
    pub y: Vec<u8>,
}

impl LatentSample {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Positions as an `n x 2` matrix.
    pub fn positions_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.x.len(), 2, |i, k| self.x[i][k])
    }
}

/// Draws `(z_i, x_i, y_i)` i.i.d.: label first, then `z` from its class law.
pub fn sample_latent<R: Rng + ?Sized>(n: usize, model: &LatentModel, rng: &mut R) -> Result<LatentSample> {
    model.validate()?;
    if n == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let label = u8::from(rng.random::<f64>() < model.prior1);
        y.push(label);
        z.push(model.class_shape(label).sample(rng));
    }
    let x = z.iter().map(|&zi| srt_transform(zi, &model.srt)).collect();
    Ok(LatentSample { z, x, y })
}
