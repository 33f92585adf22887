//! Data behind the latent-geometry figure (fig1).
//!
//! The output is one CSV file split into sections, each introduced by a
//! `#section <name>` line followed by its own header:
//!
//! * `params` — `key,value` rows with the model, sizes and summary numbers;
//! * `density` — `z,x1,x2,density0,density1` on an even grid of `z`;
//! * `sample` — `index,z,x1,x2,label,role,ase1,ase2`, one row per node, with
//!   the two-dimensional spectral embedding rotated onto the latent
//!   positions by orthogonal Procrustes.

use super::config::ExperimentConfig;
use super::records::{csv_writer, format_float};
use crate::classify::sample_replicate;
use crate::error::{Error, Result};
use crate::latent::{angle_gap, bayes_error, srt_transform, theta_e, theta_perp, LatentModel, LatentSample};
use crate::spectral::{ase, procrustes_align};

/// One point of the density curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint {
    pub z: f64,
    pub position: [f64; 2],
    pub density0: f64,
    pub density1: f64,
}

/// Everything the figure needs.
#[derive(Debug, Clone)]
pub struct FigureData {
    pub model: LatentModel,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub density: Vec<DensityPoint>,
    pub sample: LatentSample,
    /// `n × 2` spectral embedding after alignment.
    pub aligned: nalgebra::DMatrix<f64>,
    /// Procrustes residual divided by `√n`.
    pub residual_per_node: f64,
}

/// Class-conditional densities at `points` evenly spaced `z` in `[0, 1]`.
pub fn density_grid(model: &LatentModel, points: usize) -> Result<Vec<DensityPoint>> {
    if points < 2 {
        return Err(Error::Parameter(format!(
            "density grid needs >= 2 points, got {points}"
        )));
    }
    Ok((0..points)
        .map(|i| {
            let z = i as f64 / (points - 1) as f64;
            DensityPoint {
                z,
                position: srt_transform(z, &model.srt),
                density0: model.class0.pdf(z),
                density1: model.class1.pdf(z),
            }
        })
        .collect())
}

/// Samples the canonical model with `base_seed` and aligns its embedding.
pub fn run_fig1(config: &ExperimentConfig) -> Result<FigureData> {
    let model = LatentModel::fig1_canonical();
    let density = density_grid(&model, config.density_points)?;
    let rep = sample_replicate(&model, config.n, config.base_seed)?;
    let embedding = ase(&rep.graph, 2)?;
    let alignment = procrustes_align(&embedding.matrix, &rep.sample.positions_matrix())?;
    Ok(FigureData {
        model,
        n: config.n,
        m: config.m,
        seed: config.base_seed,
        density,
        sample: rep.sample,
        aligned: alignment.aligned,
        residual_per_node: alignment.residual / (config.n as f64).sqrt(),
    })
}

impl FigureData {
    /// `(key, value)` rows of the `params` section.
    pub fn params(&self) -> Result<Vec<(&'static str, String)>> {
        let m = &self.model;
        let f = format_float;
        Ok(vec![
            ("scale", f(m.srt.scale)),
            ("rotation", f(m.srt.rotation)),
            ("t1", f(m.srt.translation[0])),
            ("t2", f(m.srt.translation[1])),
            ("class0_a", f(m.class0.a)),
            ("class0_b", f(m.class0.b)),
            ("class1_a", f(m.class1.a)),
            ("class1_b", f(m.class1.b)),
            ("prior1", f(m.prior1)),
            ("n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("seed", self.seed.to_string()),
            ("theta_perp", f(theta_perp(&m.srt)?)),
            ("theta_e", f(theta_e(m)?)),
            ("angle_gap", f(angle_gap(m)?)),
            ("bayes_error", f(bayes_error(m)?)),
            ("procrustes_residual_per_node", f(self.residual_per_node)),
        ])
    }

    /// The sectioned CSV text.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv_writer(Vec::new());
        writer.write_record(["#section params"])?;
        writer.write_record(["key", "value"])?;
        for (key, value) in self.params()? {
            writer.write_record([key, value.as_str()])?;
        }
        writer.write_record(["#section density"])?;
        writer.write_record(["z", "x1", "x2", "density0", "density1"])?;
        for p in &self.density {
            writer.write_record([p.z, p.position[0], p.position[1], p.density0, p.density1].map(format_float))?;
        }
        writer.write_record(["#section sample"])?;
        writer.write_record(["index", "z", "x1", "x2", "label", "role", "ase1", "ase2"])?;
        for i in 0..self.sample.len() {
            writer.write_record([
                i.to_string(),
                format_float(self.sample.z[i]),
                format_float(self.sample.x[i][0]),
                format_float(self.sample.x[i][1]),
                self.sample.y[i].to_string(),
                if i < self.m { "train" } else { "test" }.to_string(),
                format_float(self.aligned[(i, 0)]),
                format_float(self.aligned[(i, 1)]),
            ])?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Numerical(format!("flushing in-memory CSV: {e}")))?;
        Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
    }
}

/// Splits sectioned CSV text into `(name, rows)` with each section's header
/// as its first row.
pub fn parse_sections(text: &str) -> Result<Vec<(String, Vec<Vec<String>>)>> {
    let mut sections: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    for row in reader.records() {
        let row = row?;
        if let Some(name) = row.get(0).and_then(|f| f.strip_prefix("#section ")) {
            sections.push((name.to_string(), Vec::new()));
            continue;
        }
        match sections.last_mut() {
            Some((_, rows)) => rows.push(row.iter().map(str::to_string).collect()),
            None => return Err(Error::Parameter("row before the first #section marker".into())),
        }
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{ConfigFile, ExperimentKind, Profile};
    use std::f64::consts::PI;

    fn trapezoid(points: &[DensityPoint], f: impl Fn(&DensityPoint) -> f64) -> f64 {
        points
            .windows(2)
            .map(|w| 0.5 * (w[1].z - w[0].z) * (f(&w[0]) + f(&w[1])))
            .sum()
    }

    #[test]
    fn density_grid_integrates_to_one() {
        let grid = density_grid(&LatentModel::fig1_canonical(), 512).unwrap();
        assert_eq!(grid.len(), 512);
        assert!((trapezoid(&grid, |p| p.density0) - 1.0).abs() <= 1e-3);
        assert!((trapezoid(&grid, |p| p.density1) - 1.0).abs() <= 1e-3);
        assert_eq!((grid[0].z, grid[511].z), (0.0, 1.0));
    }

    #[test]
    fn header_records_the_canonical_parameters() {
        let c = ExperimentConfig::resolve(
            ConfigFile::from_json(r#"{"experiment": "fig1", "n": 200, "m": 20, "density_points": 64}"#).unwrap(),
        )
        .unwrap();
        let data = run_fig1(&c).unwrap();
        let sections = parse_sections(&data.to_csv().unwrap()).unwrap();
        let names: Vec<&str> = sections.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["params", "density", "sample"]);
        let params: std::collections::HashMap<&str, f64> = sections[0].1[1..]
            .iter()
            .map(|r| (r[0].as_str(), r[1].parse().unwrap()))
            .collect();
        let expect = |k: &str, v: f64| assert_eq!(params[k], format_float(v).parse::<f64>().unwrap(), "{k}");
        expect("scale", 1.1);
        expect("rotation", 53.0 * PI / 32.0);
        expect("t1", 0.13);
        expect("t2", 0.97);
        expect("class0_a", 10.0);
        expect("class0_b", 3.0);
        expect("class1_a", 4.0);
        expect("class1_b", 3.0);
        expect("prior1", 0.5);
        expect("theta_perp", 5.0 * PI / 32.0);
        assert_eq!(sections[1].1.len(), 1 + 64);
        assert_eq!(sections[2].1.len(), 1 + 200);
        assert_eq!(sections[2].1[1][5], "train");
        assert_eq!(sections[2].1[200][5], "test");
    }

    #[test]
    fn procrustes_residual_shrinks_with_n() {
        let residuals: Vec<f64> = [200, 500, 1000]
            .iter()
            .map(|&n| {
                let c = ExperimentConfig {
                    n,
                    m: n / 10,
                    ..ExperimentConfig::defaults(ExperimentKind::Fig1, Profile::Paper)
                };
                run_fig1(&c).unwrap().residual_per_node
            })
            .collect();
        assert!(
            residuals[0] > residuals[1] && residuals[1] > residuals[2],
            "{residuals:?}"
        );
    }

    #[test]
    fn sections_need_a_marker() {
        assert!(parse_sections("a,b\n").is_err());
        assert!(parse_sections("").unwrap().is_empty());
    }
}
