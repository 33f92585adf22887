//! Two-layer graph convolutional networks with identity node features,
//! trained from scratch: the variational graph auto-encoder (unsupervised)
//! and the semisupervised node classifier, with hand-written reverse-mode
//! gradients, Adam, early stopping and a finite-difference gradient check.

mod adam;
mod gradcheck;
mod params;
mod semi;
mod train;
mod vgae;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, grad_check_with, GradCheckReport, FD_STEP};
pub use params::{glorot_uniform, ParamSet, SemiGcnParams, VgaeParams};
pub use semi::{gcn_forward, semisup_gradients, semisup_loss, NUM_CLASSES};
pub use train::{
    fit_semisupervised, train_semisupervised, train_unsupervised, train_vgae, EpochRecord, SemiRun, TrainingTrace,
    VgaeRun, IMPROVEMENT_TOL,
};
pub use vgae::{
    vgae_forward, vgae_forward_eval, vgae_forward_with_noise, vgae_gradients, vgae_loss, LossParts, ReconWeights,
    VgaeForwardState,
};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Relu => "relu",
            Self::Identity => "identity",
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Relu => x.max(0.0),
            Self::Identity => x,
        }
    }

    /// Derivative, with the ReLU subgradient at zero taken as 0.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Identity => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Self::Relu),
            "identity" | "linear" => Ok(Self::Identity),
            other => Err(Error::Parameter(format!("unknown activation '{other}'"))),
        }
    }
}

/// Training hyperparameters shared by both models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub out_dim: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub activation: Activation,
    pub seed: u64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 2,
            out_dim: 2,
            learning_rate: 0.01,
            max_epochs: 500,
            patience: 100,
            activation: Activation::Relu,
            seed: 0,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.out_dim == 0 {
            return Err(Error::Parameter(format!(
                "hidden ({}) and output ({}) sizes must be positive",
                self.hidden, self.out_dim
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::Parameter("max_epochs must be positive".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Parameter(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Parameter(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}
