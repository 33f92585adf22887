//! `speclab` — runs one experiment campaign and writes its table.
//!
//! Settings are layered: profile defaults, then `--config FILE.json`, then
//! the individual flags. Exit codes: 0 success, 2 configuration error,
//! 3 numerical failure, 4 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use speclab_core::experiments::{self, write_atomic, ConfigFile, ExperimentConfig, ExperimentKind, Profile, SelectOn};
use speclab_core::Error;

#[derive(Debug, Parser)]
#[command(name = "speclab", version, about = "Spectral vs GCN node-classification experiments")]
struct Cli {
    /// fig1, exp1, exp2, exp3, exp4 or gradcheck
    experiment: String,
    /// Number of nodes
    #[arg(long)]
    n: Option<usize>,
    /// Number of labelled nodes
    #[arg(long)]
    m: Option<usize>,
    /// Monte Carlo replicates
    #[arg(long)]
    replicates: Option<usize>,
    /// Base seed; replicate r uses seed + r
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: <experiment>.csv)
    #[arg(long)]
    out: Option<PathBuf>,
    /// quick or paper
    #[arg(long)]
    profile: Option<String>,
    /// JSON file with configuration fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run only the replicate with this seed
    #[arg(long)]
    replay: Option<u64>,
    /// Hyperparameter selection for exp3: training or validation
    #[arg(long)]
    select_on: Option<String>,
}

fn flags(cli: &Cli) -> Result<ConfigFile, Error> {
    Ok(ConfigFile {
        experiment: Some(cli.experiment.parse::<ExperimentKind>()?),
        profile: cli.profile.as_deref().map(str::parse::<Profile>).transpose()?,
        n: cli.n,
        m: cli.m,
        replicates: cli.replicates,
        base_seed: cli.seed,
        out_path: cli.out.clone(),
        select_on: cli.select_on.as_deref().map(str::parse::<SelectOn>).transpose()?,
        ..ConfigFile::default()
    })
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let flags = flags(cli)?;
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let config = ExperimentConfig::resolve(file.overlay(flags))?;
    let output = experiments::run(&config, cli.replay)?;
    let path = config.out_path.clone().unwrap_or(output.default_path);
    write_atomic(&path, output.csv.as_bytes())?;
    if let Some(report) = output.report {
        print!("{report}");
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}
