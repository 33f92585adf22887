//! Which adjacency eigenvectors an unsupervised GCN embedding recovers (exp4).
//!
//! The auto-encoder is trained on a latent-model graph and on an
//! Erdős–Rényi graph; each embedding column is compared with the leading
//! adjacency eigenvectors by principal angle.

use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::records::{csv_writer, format_float};
use crate::classify::sample_replicate;
use crate::error::{Error, Result};
use crate::gcn::{train_vgae, TrainConfig, TrainingTrace};
use crate::latent::{sample_erdos_renyi, Graph, LatentModel};
use crate::rng::{indexed_rng, Stream};
use crate::spectral::{angle_table_against, eigh_top, normalized_adjacency, principal_angle, AngleTable};

/// Column names of the angle table CSV.
pub const ANGLE_HEADER: [&str; 5] = ["graph", "eigenvector", "eigenvalue", "dimension", "angle_deg"];

/// Angle table of one graph.
#[derive(Debug, Clone)]
pub struct AngleStudy {
    /// `latent` or `erdos-renyi`.
    pub graph: &'static str,
    pub table: AngleTable,
    /// Angle between the leading adjacency eigenvector and the all-ones vector.
    pub ones_angle_deg: f64,
    pub trace: TrainingTrace,
}

/// The two exp4 graphs: the canonical latent graph uses the replicate
/// streams of `base_seed`; the Erdős–Rényi graph draws from the graph stream
/// of `base_seed` at index 1. Both trainings use `base_seed`.
pub fn exp4_graphs(config: &ExperimentConfig) -> Result<Vec<(&'static str, Graph)>> {
    let latent = sample_replicate(&LatentModel::fig1_canonical(), config.n, config.base_seed)?.graph;
    let er = sample_erdos_renyi(
        config.n,
        config.er_p,
        &mut indexed_rng(config.base_seed, Stream::Graph, 1),
    )?;
    Ok(vec![("latent", latent), ("erdos-renyi", er)])
}

/// Trains the auto-encoder on `graph` and tabulates its angles.
pub fn study_graph(name: &'static str, graph: &Graph, config: &ExperimentConfig) -> Result<AngleStudy> {
    let train = TrainConfig {
        seed: config.base_seed,
        ..config.train.clone()
    };
    let run = train_vgae(graph, &normalized_adjacency(graph), &train)?;
    let wanted = (config.top_k + 1).min(graph.n());
    let eig = eigh_top(&graph.adjacency_matrix(), wanted)?;
    let table = angle_table_against(&run.embedding, &eig, config.top_k)?;
    let ones = vec![1.0; graph.n()];
    let leading: Vec<f64> = eig.vectors.column(0).iter().copied().collect();
    let ones_angle_deg = principal_angle(&leading, &ones)?;
    Ok(AngleStudy {
        graph: name,
        table,
        ones_angle_deg,
        trace: run.trace,
    })
}

/// Runs exp4 on both graphs.
pub fn run_exp4(config: &ExperimentConfig) -> Result<Vec<AngleStudy>> {
    exp4_graphs(config)?
        .iter()
        .map(|(name, graph)| study_graph(name, graph, config))
        .collect()
}

/// Full-precision angle table CSV, one row per (graph, eigenvector, dimension).
pub fn angle_csv(studies: &[AngleStudy]) -> Result<String> {
    let mut writer = csv_writer(Vec::new());
    writer.write_record(ANGLE_HEADER)?;
    for study in studies {
        let t = &study.table;
        for j in 0..t.degrees.nrows() {
            for k in 0..t.degrees.ncols() {
                writer.write_record([
                    study.graph.to_string(),
                    (j + 1).to_string(),
                    format_float(t.eigenvalues[j]),
                    (k + 1).to_string(),
                    format_float(t.degrees[(j, k)]),
                ])?;
            }
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Numerical(format!("flushing in-memory CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

/// Tables rounded to two digits, one block per graph.
pub fn angle_report(studies: &[AngleStudy]) -> String {
    let mut out = String::new();
    for study in studies {
        let t = &study.table;
        let _ = writeln!(
            out,
            "{} graph (angles in degrees; best epoch {}, loss {:.4})",
            study.graph, study.trace.best_epoch, study.trace.best_loss
        );
        let _ = write!(out, "{:>8}", "");
        for k in 0..t.degrees.ncols() {
            let _ = write!(out, "{:>8}", format!("Dim-{}", k + 1));
        }
        out.push('\n');
        for j in 0..t.degrees.nrows() {
            let _ = write!(out, "{:>8}", format!("Eig-{}", j + 1));
            for k in 0..t.degrees.ncols() {
                let _ = write!(out, "{:>8}", round_two_digits(t.degrees[(j, k)]));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "leading eigenvector vs all-ones: {}{}",
            round_two_digits(study.ones_angle_deg),
            if t.degenerate {
                "; repeated eigenvalue, eigenvectors not unique"
            } else {
                ""
            }
        );
        out.push('\n');
    }
    out
}

/// Two significant digits for values below 10, whole degrees above
/// (0.9812 → "0.98", 2.84 → "2.8", 89.97 → "90").
pub fn round_two_digits(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{ConfigFile, ExperimentKind, Profile};

    #[test]
    fn two_digit_rounding() {
        assert_eq!(round_two_digits(0.9812), "0.98");
        assert_eq!(round_two_digits(2.84), "2.8");
        assert_eq!(round_two_digits(89.97), "90");
        assert_eq!(round_two_digits(45.4), "45");
        assert_eq!(round_two_digits(0.0), "0");
    }

    #[test]
    fn er_leading_eigenvector_follows_degree_concentration() {
        // A = p(11ᵀ - I) + noise, so to first order the leading eigenvector is
        // the degree vector A·1 and its angle to 1 is about
        // asin(sqrt((1 - p) / (n p))) = 5.44° at n = 1000, p = 0.1.
        let c = ExperimentConfig::defaults(ExperimentKind::Exp4, Profile::Paper);
        let graphs = exp4_graphs(&c).unwrap();
        let er = &graphs[1].1;
        assert_eq!(er.n(), 1000);
        let eig = eigh_top(&er.adjacency_matrix(), 1).unwrap();
        let leading: Vec<f64> = eig.vectors.column(0).iter().copied().collect();
        let ones = vec![1.0; er.n()];
        let angle = principal_angle(&leading, &ones).unwrap();
        let degrees: Vec<f64> = er.degrees().iter().map(|&d| d as f64).collect();
        let first_order = principal_angle(&degrees, &ones).unwrap();
        let expected = ((1.0 - c.er_p) / (c.n as f64 * c.er_p)).sqrt().asin().to_degrees();
        assert!(
            (angle - first_order).abs() <= 0.5,
            "{angle} vs degree vector {first_order}"
        );
        assert!((angle - expected).abs() <= 1.0, "{angle} vs {expected}");
        // the all-ones direction dominates: far from orthogonal
        assert!(angle < 10.0);
    }

    #[test]
    fn small_study_has_expected_shape() {
        let c = ExperimentConfig::resolve(
            ConfigFile::from_json(r#"{"experiment": "exp4", "n": 120, "max_epochs": 40}"#).unwrap(),
        )
        .unwrap();
        let studies = run_exp4(&c).unwrap();
        assert_eq!(studies.len(), 2);
        for s in &studies {
            assert_eq!(s.table.degrees.shape(), (3, 4));
            assert!(s.table.degrees.iter().all(|a| (0.0..=90.0).contains(a)));
        }
        let csv = angle_csv(&studies).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 12);
        assert!(csv.starts_with("graph,eigenvector,eigenvalue,dimension,angle_deg\n"));
        let report = angle_report(&studies);
        assert!(report.contains("Eig-3") && report.contains("Dim-4"));
    }
}
