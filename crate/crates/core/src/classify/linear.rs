use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Predicts class 1 when `weights · x + bias > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Training data held a single class; the rule is the constant
    /// prediction of that class (zero weights, bias of matching sign).
    pub constant: bool,
}

impl LinearClassifier {
    fn constant_class(dim: usize, class: u8) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: if class == 1 { 1.0 } else { -1.0 },
            constant: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) > 0.0)
    }

    /// Predictions for every row of `rows`.
    pub fn predict_rows(&self, rows: &DMatrix<f64>) -> Result<Vec<u8>> {
        if rows.ncols() != self.dim() {
            return Err(Error::Parameter(format!(
                "classifier expects {} features, got {}",
                self.dim(),
                rows.ncols()
            )));
        }
        let mut row = vec![0.0; rows.ncols()];
        Ok((0..rows.nrows())
            .map(|i| {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = rows[(i, k)];
                }
                self.predict(&row)
            })
            .collect())
    }
}

fn check_labels(rows: &DMatrix<f64>, labels: &[u8]) -> Result<()> {
    if rows.nrows() != labels.len() {
        return Err(Error::Parameter(format!(
            "{} rows but {} labels",
            rows.nrows(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Parameter(format!("labels must be 0 or 1, got {bad}")));
    }
    Ok(())
}

/// Fisher linear discriminant with a small ridge and a prior-adjusted bias.
///
/// `w = (Σ + ρI)⁻¹ (mean₁ − mean₀)` with `Σ` the pooled within-class
/// covariance and `ρ = 1e-6 · tr(Σ) / d`; the boundary passes through the
/// midpoint of the class means shifted by `ln(π₁/π₀)` in decision units.
pub fn fit_linear(rows: &DMatrix<f64>, labels: &[u8]) -> Result<LinearClassifier> {
    check_labels(rows, labels)?;
    let d = rows.ncols();
    if d == 0 {
        return Err(Error::Parameter("cannot classify zero-dimensional rows".into()));
    }
    let m = labels.len();
    if m == 0 {
        return Err(Error::Parameter("no training rows".into()));
    }
    let count1 = labels.iter().filter(|&&y| y == 1).count();
    let count0 = m - count1;
    if count0 == 0 || count1 == 0 {
        return Ok(LinearClassifier::constant_class(d, u8::from(count1 > 0)));
    }

    let mut means = [DVector::zeros(d), DVector::zeros(d)];
    for (i, &y) in labels.iter().enumerate() {
        means[usize::from(y)] += rows.row(i).transpose();
    }
    means[0] /= count0 as f64;
    means[1] /= count1 as f64;

    let mut scatter = DMatrix::zeros(d, d);
    for (i, &y) in labels.iter().enumerate() {
        let centred = rows.row(i).transpose() - &means[usize::from(y)];
        scatter += &centred * centred.transpose();
    }
    let dof = if m > 2 { m - 2 } else { 1 };
    let mut covariance = scatter / dof as f64;
    let ridge = 1e-6 * covariance.trace() / d as f64;
    for k in 0..d {
        covariance[(k, k)] += ridge;
    }
    let difference = &means[1] - &means[0];
    // Zero within-class spread leaves the nearest-mean direction.
    let weights = match covariance.cholesky() {
        Some(chol) if ridge > 0.0 => chol.solve(&difference),
        _ => difference,
    };
    let midpoint = (&means[0] + &means[1]) * 0.5;
    let bias = -weights.dot(&midpoint) + (count1 as f64 / count0 as f64).ln();
    if !(bias.is_finite() && weights.iter().all(|w| w.is_finite())) {
        return Err(Error::Numerical("discriminant has non-finite coefficients".into()));
    }
    Ok(LinearClassifier {
        weights: weights.iter().copied().collect(),
        bias,
        constant: false,
    })
}

/// Fraction of positions where `predicted` and `labels` differ.
pub fn error_rate(predicted: &[u8], labels: &[u8]) -> Result<f64> {
    if predicted.len() != labels.len() || labels.is_empty() {
        return Err(Error::Parameter(format!(
            "cannot score {} predictions against {} labels",
            predicted.len(),
            labels.len()
        )));
    }
    let wrong = predicted.iter().zip(labels).filter(|(p, y)| p != y).count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// Test error of `classifier` on `rows`.
pub fn evaluate(classifier: &LinearClassifier, rows: &DMatrix<f64>, labels: &[u8]) -> Result<f64> {
    check_labels(rows, labels)?;
    error_rate(&classifier.predict_rows(rows)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn clouds(m: usize, shift: f64, seed: u64) -> (DMatrix<f64>, Vec<u8>) {
        let mut rng = stream_rng(seed, Stream::Fixture);
        let labels: Vec<u8> = (0..m).map(|i| (i % 2) as u8).collect();
        let rows = DMatrix::from_fn(m, 2, |i, k| {
            let noise: f64 = rng.sample(StandardNormal);
            noise + if labels[i] == 1 { shift * (k as f64 + 1.0) } else { 0.0 }
        });
        (rows, labels)
    }

    #[test]
    fn separated_clouds_have_zero_training_error() {
        let (rows, labels) = clouds(200, 25.0, 1);
        let clf = fit_linear(&rows, &labels).unwrap();
        assert_eq!(evaluate(&clf, &rows, &labels).unwrap(), 0.0);
        assert!(!clf.constant);
    }

    #[test]
    fn identical_classes_give_chance_error() {
        let (rows, labels) = clouds(20_000, 0.0, 2);
        let clf = fit_linear(&rows, &labels).unwrap();
        let err = evaluate(&clf, &rows, &labels).unwrap();
        assert!((err - 0.5).abs() < 0.02, "{err}");
    }

    /// Equal-variance Gaussian fit in one dimension: the discriminant's
    /// boundary must sit at the threshold minimising the fitted model's
    /// error, found here by exhaustive bracketing search.
    #[test]
    fn one_dimensional_boundary_matches_exhaustive_search() {
        let mut rng = stream_rng(3, Stream::Fixture);
        let labels: Vec<u8> = (0..300).map(|i| u8::from(i % 3 == 0)).collect();
        let values: Vec<f64> = labels
            .iter()
            .map(|&y| rng.sample::<f64, _>(StandardNormal) * 0.7 + if y == 1 { 1.3 } else { -0.2 })
            .collect();
        let rows = DMatrix::from_column_slice(values.len(), 1, &values);
        let clf = fit_linear(&rows, &labels).unwrap();
        let boundary = -clf.bias / clf.weights[0];

        let stats = |class: u8| {
            let v: Vec<f64> = values
                .iter()
                .zip(&labels)
                .filter(|(_, &y)| y == class)
                .map(|(x, _)| *x)
                .collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
            (v.len() as f64, mean, ss)
        };
        let (c0, m0, ss0) = stats(0);
        let (c1, m1, ss1) = stats(1);
        let var = (ss0 + ss1) / (c0 + c1 - 2.0) * (1.0 + 1e-6);
        let sd = var.sqrt();
        let (p0, p1) = (c0 / (c0 + c1), c1 / (c0 + c1));
        let cdf = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
        let model_error = |t: f64| p0 * (1.0 - cdf((t - m0) / sd)) + p1 * cdf((t - m1) / sd);
        // coarse scan, then repeated bracket refinement
        let (mut lo, mut hi) = (m0, m1);
        for _ in 0..60 {
            let step = (hi - lo) / 100.0;
            let best = (0..=100)
                .map(|k| lo + step * k as f64)
                .min_by(|a, b| model_error(*a).total_cmp(&model_error(*b)))
                .unwrap();
            lo = best - step;
            hi = best + step;
        }
        let oracle = 0.5 * (lo + hi);
        assert!((boundary - oracle).abs() <= 1e-6, "{boundary} vs {oracle}");
    }

    #[test]
    fn single_class_training_gives_flagged_constant_rule() {
        let rows = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let clf = fit_linear(&rows, &[1, 1, 1]).unwrap();
        assert!(clf.constant);
        assert_eq!(clf.predict_rows(&rows).unwrap(), vec![1, 1, 1]);
        let clf = fit_linear(&rows, &[0, 0, 0]).unwrap();
        assert_eq!(clf.predict_rows(&rows).unwrap(), vec![0, 0, 0]);
        // against balanced labels the constant rule is right half the time
        let test = DMatrix::from_row_slice(4, 2, &[1.0; 8]);
        assert_eq!(evaluate(&clf, &test, &[0, 1, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn zero_spread_falls_back_to_nearest_mean() {
        let rows = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 1.0]);
        let clf = fit_linear(&rows, &[0, 1]).unwrap();
        assert_eq!(clf.predict_rows(&rows).unwrap(), vec![0, 1]);
    }

    #[test]
    fn evaluation_matches_counting() {
        let (rows, labels) = clouds(101, 0.8, 4);
        let clf = fit_linear(&rows.rows(0, 50).into_owned(), &labels[..50]).unwrap();
        let test = rows.rows(50, 51).into_owned();
        let mut wrong = 0;
        for i in 0..51 {
            let score = clf.weights[0] * test[(i, 0)] + clf.weights[1] * test[(i, 1)] + clf.bias;
            if u8::from(score > 0.0) != labels[50 + i] {
                wrong += 1;
            }
        }
        assert_eq!(evaluate(&clf, &test, &labels[50..]).unwrap(), wrong as f64 / 51.0);
        let perfect = clf.predict_rows(&test).unwrap();
        assert_eq!(evaluate(&clf, &test, &perfect).unwrap(), 0.0);
    }

    #[test]
    fn input_validation() {
        let rows = DMatrix::zeros(2, 1);
        assert!(fit_linear(&rows, &[0]).is_err());
        assert!(fit_linear(&rows, &[0, 2]).is_err());
        assert!(error_rate(&[], &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn affine_rescaling_of_a_coordinate_preserves_predictions(
            seed in any::<u64>(),
            scale in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0],
            offset in -10.0f64..10.0,
            coordinate in 0usize..2,
        ) {
            let (rows, labels) = clouds(120, 1.0, seed);
            let (train, test) = (rows.rows(0, 80).into_owned(), rows.rows(80, 40).into_owned());
            let before = fit_linear(&train, &labels[..80]).unwrap().predict_rows(&test).unwrap();
            let transform = |m: &DMatrix<f64>| {
                let mut m = m.clone();
                m.column_mut(coordinate).apply(|v| *v = *v * scale + offset);
                m
            };
            let after = fit_linear(&transform(&train), &labels[..80]).unwrap().predict_rows(&transform(&test)).unwrap();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn evaluation_is_permutation_invariant(seed in any::<u64>(), rotate in 0usize..40) {
            let (rows, labels) = clouds(80, 0.7, seed);
            let clf = fit_linear(&rows.rows(0, 40).into_owned(), &labels[..40]).unwrap();
            let test = rows.rows(40, 40).into_owned();
            let order: Vec<usize> = (0..40).map(|i| (i * 7 + rotate) % 40).collect();
            let shuffled = DMatrix::from_fn(40, 2, |i, k| test[(order[i], k)]);
            let shuffled_labels: Vec<u8> = order.iter().map(|&i| labels[40 + i]).collect();
            prop_assert_eq!(
                evaluate(&clf, &test, &labels[40..]).unwrap(),
                evaluate(&clf, &shuffled, &shuffled_labels).unwrap()
            );
        }
    }
}
