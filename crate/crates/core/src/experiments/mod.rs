//! Experiment campaigns and their file outputs.
//!
//! Each campaign expands its configuration into independent units of work
//! (one per geometry and replicate), evaluates them on the rayon pool and
//! assembles the rows in a fixed order, so the output bytes do not depend on
//! scheduling or thread count.

mod angle_study;
mod campaign;
mod config;
mod figure;
mod records;
mod search;

pub use angle_study::{
    angle_csv, angle_report, exp4_graphs, round_two_digits, run_exp4, study_graph, AngleStudy, ANGLE_HEADER,
};
pub use campaign::{run_exp1, run_exp2, score_replicate};
pub use config::{
    default_gaps, labelled_count, validation_split, ConfigFile, ExperimentConfig, ExperimentKind, Profile, SelectOn,
};
pub use figure::{density_grid, parse_sections, run_fig1, DensityPoint, FigureData};
pub use records::{
    format_float, from_csv_str, read_csv, to_csv_string, write_atomic, write_csv, ResultRecord, RESULT_HEADER,
    SIGNIFICANT_DIGITS,
};
pub use search::{run_exp3, search_replicate, CandidateScore, SearchOutcome, SearchTarget, Selection, Split};

use std::path::PathBuf;

use rayon::prelude::*;

use crate::classify::replicate_seed;
use crate::error::{Error, Result};
use crate::gcn::{grad_check_with, Activation};
use crate::latent::{angle_gap, support_interval, translation_for_gap, validate_support, LatentModel, SUPPORT_TAIL};

/// Canonical model moved along `t2 = 0.97` to the requested angle gap, with
/// the realised gap. Fails if any realisable pair leaves `[0, 1]`.
pub fn geometry_for_gap(gap: f64) -> Result<(LatentModel, f64)> {
    let canonical = LatentModel::fig1_canonical();
    let t = translation_for_gap(&canonical, canonical.srt.translation[1], gap)?;
    let model = canonical.with_srt(canonical.srt.with_translation(t));
    let (z_lo, z_hi) = support_interval(&model, SUPPORT_TAIL)?;
    if !validate_support(&model.srt, z_lo, z_hi) {
        return Err(Error::UndefinedGeometry(format!(
            "gap {gap} needs t = ({}, {}), which puts inner products outside [0, 1]",
            t[0], t[1]
        )));
    }
    let realised = angle_gap(&model)?;
    Ok((model, realised))
}

/// Evaluates every unit in parallel and returns the results in unit order.
/// The first failing unit (in unit order) is reported with its seed.
pub(crate) fn run_units<U, T, S, F>(units: &[U], seed_of: S, work: F) -> Result<Vec<T>>
where
    U: Sync,
    T: Send,
    S: Fn(&U) -> u64 + Sync,
    F: Fn(&U) -> Result<T> + Sync,
{
    let outcomes: Vec<Result<T>> = units.par_iter().map(&work).collect();
    units
        .iter()
        .zip(outcomes)
        .map(|(unit, outcome)| {
            outcome.map_err(|source| Error::Replicate {
                seed: seed_of(unit),
                source: Box::new(source),
            })
        })
        .collect()
}

/// Replicate indices to run: all of them, or the one whose seed is `replay`.
pub fn replicate_indices(config: &ExperimentConfig, replay: Option<u64>) -> Result<Vec<usize>> {
    match replay {
        None => Ok((0..config.replicates).collect()),
        Some(seed) => {
            let index = seed.wrapping_sub(config.base_seed);
            if index >= config.replicates as u64 {
                return Err(Error::Config(format!(
                    "seed {seed} is not a replicate of this campaign (base seed {}, {} replicates)",
                    config.base_seed, config.replicates
                )));
            }
            let index = usize::try_from(index).expect("below the replicate count");
            debug_assert_eq!(replicate_seed(config.base_seed, index), seed);
            Ok(vec![index])
        }
    }
}

/// Column names of the gradient-check table.
pub const GRADCHECK_HEADER: [&str; 4] = ["seed", "n", "activation", "max_rel_error"];

/// Gradient check on one fixture per replicate seed, for both activations.
pub fn run_gradcheck(config: &ExperimentConfig, replicates: &[usize]) -> Result<Vec<(u64, Activation, f64)>> {
    let units: Vec<(u64, Activation)> = replicates
        .iter()
        .flat_map(|&r| {
            let seed = replicate_seed(config.base_seed, r);
            [(seed, Activation::Relu), (seed, Activation::Identity)]
        })
        .collect();
    let errors = run_units(
        &units,
        |&(seed, _)| seed,
        |&(seed, activation)| Ok(grad_check_with(config.n, seed, activation, 1.0)?.max_rel_error),
    )?;
    Ok(units.into_iter().zip(errors).map(|((s, a), e)| (s, a, e)).collect())
}

/// What a finished run hands back to the caller.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// File contents for the output path.
    pub csv: String,
    /// Text summary for the terminal, if the campaign has one.
    pub report: Option<String>,
    /// Where the CSV goes when the config names no path.
    pub default_path: PathBuf,
}

/// Runs the configured campaign (or one replicate of it) and renders its
/// output without touching the file system.
pub fn run(config: &ExperimentConfig, replay: Option<u64>) -> Result<RunOutput> {
    let replicates = replicate_indices(config, replay)?;
    let (csv, report) = match config.experiment {
        ExperimentKind::Exp1 => (to_csv_string(&run_exp1(config, &replicates)?)?, None),
        ExperimentKind::Exp2 => (to_csv_string(&run_exp2(config, &replicates)?)?, None),
        ExperimentKind::Exp3 => {
            let outcome = run_exp3(config, &replicates)?;
            (to_csv_string(&outcome.records)?, Some(outcome.report(config)))
        }
        ExperimentKind::Exp4 => {
            let studies = run_exp4(config)?;
            (angle_csv(&studies)?, Some(angle_report(&studies)))
        }
        ExperimentKind::Fig1 => {
            let data = run_fig1(config)?;
            let summary = format!(
                "fig1: n={} m={} seed={}, Procrustes residual per node {}\n",
                data.n,
                data.m,
                data.seed,
                format_float(data.residual_per_node)
            );
            (data.to_csv()?, Some(summary))
        }
        ExperimentKind::Gradcheck => {
            let rows = run_gradcheck(config, &replicates)?;
            let mut writer = records::csv_writer(Vec::new());
            writer.write_record(GRADCHECK_HEADER)?;
            for &(seed, activation, err) in &rows {
                writer.write_record([
                    seed.to_string(),
                    config.n.to_string(),
                    activation.as_str().into(),
                    format_float(err),
                ])?;
            }
            let worst = rows.iter().map(|r| r.2).fold(0.0, f64::max);
            let bytes = writer
                .into_inner()
                .map_err(|e| Error::Numerical(format!("flushing in-memory CSV: {e}")))?;
            let report = format!("gradcheck: {} fixtures, worst relative error {worst:.3e}\n", rows.len());
            (String::from_utf8(bytes).expect("CSV fields are UTF-8"), Some(report))
        }
    };
    Ok(RunOutput {
        csv,
        report,
        default_path: PathBuf::from(format!("{}.csv", config.experiment)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::resolve(ConfigFile::from_json(text).unwrap()).unwrap()
    }

    #[test]
    fn gap_geometries_are_exact_and_valid() {
        for gap in default_gaps() {
            let (_, realised) = geometry_for_gap(gap).unwrap();
            assert!((realised - gap).abs() < 1e-9, "{gap} -> {realised}");
        }
        assert!(geometry_for_gap(PI / 4.0).is_err());
    }

    #[test]
    fn replay_reproduces_the_row() {
        let c = config(
            r#"{"experiment": "exp1", "n": 80, "m": 10, "replicates": 3, "k": 2, "base_seed": 40, "max_epochs": 20}"#,
        );
        let full = from_csv_str(&run(&c, None).unwrap().csv).unwrap();
        let replay = from_csv_str(&run(&c, Some(41)).unwrap().csv).unwrap();
        assert_eq!(replay.len(), 2 * 5);
        let original: Vec<&ResultRecord> = full.iter().filter(|r| r.seed == 41).collect();
        assert_eq!(original.len(), replay.len());
        for (a, b) in original.into_iter().zip(&replay) {
            assert_eq!(a, b);
        }
        for bad in [39, 43] {
            assert_eq!(run(&c, Some(bad)).unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn failing_unit_reports_its_seed() {
        let units = [3u64, 4, 5];
        let err = run_units(
            &units,
            |&s| s * 10,
            |&s| {
                if s == 4 {
                    Err(Error::Numerical("boom".into()))
                } else {
                    Ok(s)
                }
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Replicate { seed: 40, .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn gradcheck_campaign_table() {
        let c = config(r#"{"experiment": "gradcheck", "replicates": 3}"#);
        let out = run(&c, None).unwrap();
        let lines: Vec<&str> = out.csv.lines().collect();
        assert_eq!(lines[0], "seed,n,activation,max_rel_error");
        assert_eq!(lines.len(), 1 + 6);
        for line in &lines[1..] {
            let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!(err <= 1e-5, "{line}");
        }
    }

    #[test]
    fn output_is_independent_of_thread_count() {
        let c = config(
            r#"{"experiment": "exp2", "n": 60, "ratios": [0.2, 0.5], "replicates": 3, "max_epochs": 15, "gaps": [0.0, 0.1]}"#,
        );
        let render = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run(&c, None).unwrap().csv)
        };
        let one = render(1);
        assert_eq!(one, render(4));
        assert_eq!(one, render(3));
    }
}
