//! Campaign-level properties checked at reduced size.

use speclab_core::classify::ErrorEstimate;
use speclab_core::experiments::{read_csv, run_exp1, write_csv, ConfigFile, ExperimentConfig, ExperimentKind};

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = mid;
        }
        i = j + 1;
    }
    ranks
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (x.len() - 1) as f64 / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

#[test]
fn spearman_helper_examples() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, -5.0]) + 1.0).abs() < 1e-12);
    assert_eq!(ranks(&[2.0, 1.0, 2.0]), [1.5, 0.0, 1.5]);
}

#[test]
fn ase1_error_falls_as_the_angle_gap_opens() {
    let file =
        ConfigFile::from_json(r#"{"experiment": "exp1", "n": 500, "m": 50, "replicates": 20, "methods": ["ase-1"]}"#)
            .unwrap();
    let config = ExperimentConfig::resolve(file).unwrap();
    assert_eq!(config.k, 12);
    let replicates: Vec<usize> = (0..config.replicates).collect();
    let records = run_exp1(&config, &replicates).unwrap();
    assert_eq!(records.len(), 12 * 20);
    let (gaps, means): (Vec<f64>, Vec<f64>) = records
        .chunks(20)
        .map(|point| {
            let errors: Vec<f64> = point.iter().map(|r| r.test_error).collect();
            (
                point[0].angle_diff_rad.unwrap(),
                ErrorEstimate::from_errors(&errors).unwrap().mean_error,
            )
        })
        .unzip();
    assert!(gaps.windows(2).all(|w| w[0] < w[1]), "{gaps:?}");
    let rho = spearman(&gaps, &means);
    assert!(rho < 0.0, "Spearman {rho}, means {means:?}");
}

#[test]
fn written_tables_read_back() {
    let file =
        ConfigFile::from_json(r#"{"experiment": "exp1", "n": 90, "m": 9, "replicates": 2, "k": 2, "max_epochs": 20}"#)
            .unwrap();
    let config = ExperimentConfig::resolve(file).unwrap();
    assert_eq!(config.experiment, ExperimentKind::Exp1);
    let records = run_exp1(&config, &[0, 1]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp1.csv");
    write_csv(&records, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(
            (a.method.as_str(), a.replicate, a.seed),
            (b.method.as_str(), b.replicate, b.seed)
        );
        assert!((a.test_error - b.test_error).abs() <= 1e-10);
    }
}
