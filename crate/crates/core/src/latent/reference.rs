//! Reference classifiers on the latent scalar: the Bayes rule and the
//! empirical-risk-minimising threshold.
//!
//! srt is injective, so classifying `z` is equivalent to classifying `x`.

use super::LatentModel;
use crate::error::Result;
use crate::quadrature::adaptive_simpson;

const BAYES_TOL: f64 = 1e-9;

/// Bayes risk `L* = ∫ min(π0 f0, π1 f1) dz`.
pub fn bayes_error(model: &LatentModel) -> Result<f64> {
    model.validate()?;
    let p0 = model.prior0();
    let p1 = model.prior1;
    adaptive_simpson(
        |z| (p0 * model.class0.pdf(z)).min(p1 * model.class1.pdf(z)),
        0.0,
        1.0,
        BAYES_TOL,
    )
}

/// Bayes rule on `z`: class 1 iff its weighted density is strictly larger.
pub fn bayes_predict(model: &LatentModel, z: f64) -> u8 {
    u8::from(model.prior1 * model.class1.pdf(z) > model.prior0() * model.class0.pdf(z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Predict 0 when `z > threshold`, 1 otherwise.
    ZeroAbove,
    /// Predict 1 when `z > threshold`, 0 otherwise.
    OneAbove,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdClassifier {
    /// May be infinite (constant classifier).
    pub threshold: f64,
    pub orientation: Orientation,
    pub training_errors: usize,
}

impl ThresholdClassifier {
    pub fn predict(&self, z: f64) -> u8 {
        let above = z > self.threshold;
        match self.orientation {
            Orientation::ZeroAbove => u8::from(!above),
            Orientation::OneAbove => u8::from(above),
        }
    }

    pub fn error_rate(&self, z: &[f64], y: &[u8]) -> f64 {
        let wrong = z.iter().zip(y).filter(|(&zi, &yi)| self.predict(zi) != yi).count();
        wrong as f64 / z.len() as f64
    }
}

/// Exhaustive search over threshold rules on `z`.
///
/// Candidate thresholds are `-inf`, the midpoints between consecutive distinct
/// sorted values, and `+inf`; both orientations are tried. Ties go to the
/// smallest threshold, and `ZeroAbove` before `OneAbove`.
pub fn erm_threshold(z: &[f64], y: &[u8]) -> ThresholdClassifier {
    assert_eq!(z.len(), y.len(), "z and y must have equal length");
    assert!(!z.is_empty(), "ERM needs at least one training pair");
    let m = z.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]));

    let total_ones = y.iter().filter(|&&v| v == 1).count();
    let total_zeros = m - total_ones;
    let (mut left_ones, mut left_zeros) = (0usize, 0usize);

    let mut best = ThresholdClassifier {
        threshold: f64::NEG_INFINITY,
        orientation: Orientation::ZeroAbove,
        training_errors: usize::MAX,
    };
    for k in 0..=m {
        if k > 0 {
            if y[order[k - 1]] == 1 {
                left_ones += 1;
            } else {
                left_zeros += 1;
            }
        }
        let threshold = if k == 0 {
            f64::NEG_INFINITY
        } else if k == m {
            f64::INFINITY
        } else {
            let (a, b) = (z[order[k - 1]], z[order[k]]);
            if a == b {
                continue;
            }
            0.5 * (a + b)
        };
        let right_ones = total_ones - left_ones;
        let right_zeros = total_zeros - left_zeros;
        // ZeroAbove predicts 1 on the left.
        let zero_above = left_zeros + right_ones;
        let one_above = left_ones + right_zeros;
        for (errors, orientation) in [(zero_above, Orientation::ZeroAbove), (one_above, Orientation::OneAbove)] {
            if errors < best.training_errors {
                best = ThresholdClassifier {
                    threshold,
                    orientation,
                    training_errors: errors,
                };
            }
        }
    }
    best
}
