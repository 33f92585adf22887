//! Campaign configuration: profile defaults, JSON files and overrides.
//!
//! Values are layered: profile defaults first, then the JSON file, then
//! command-line flags. Every layer is a [`ConfigFile`] with optional fields,
//! so the same type decodes files and carries flag overrides.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::Method;
use crate::error::{Error, Result};
use crate::gcn::{Activation, TrainConfig};

/// The campaigns the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fig1,
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Gradcheck,
}

impl ExperimentKind {
    pub const ALL: [Self; 6] = [
        Self::Fig1,
        Self::Exp1,
        Self::Exp2,
        Self::Exp3,
        Self::Exp4,
        Self::Gradcheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Exp1 => "exp1",
            Self::Exp2 => "exp2",
            Self::Exp3 => "exp3",
            Self::Exp4 => "exp4",
            Self::Gradcheck => "gradcheck",
        }
    }

    /// Methods a campaign can run, in output order.
    pub fn method_menu(self) -> Vec<Method> {
        use Activation::{Identity, Relu};
        match self {
            Self::Exp1 | Self::Exp2 => vec![
                Method::ErmLatent,
                Method::Ase { dim: 1 },
                Method::Ase { dim: 2 },
                Method::GcnUnsup { activation: Relu },
                Method::GcnUnsup { activation: Identity },
            ],
            Self::Exp3 => vec![
                Method::Ase { dim: 2 },
                Method::GcnUnsup { activation: Relu },
                Method::GcnSemisup { activation: Relu },
            ],
            Self::Fig1 | Self::Exp4 | Self::Gradcheck => Vec::new(),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Size presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Minutes on a desktop.
    Quick,
    /// The published sizes.
    #[default]
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Self::Quick),
            "paper" => Ok(Self::Paper),
            other => Err(Error::Config(format!("unknown profile '{other}' (quick|paper)"))),
        }
    }
}

/// Which accuracy drives the hyperparameter search selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectOn {
    #[default]
    Training,
    Validation,
}

impl FromStr for SelectOn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training" => Ok(Self::Training),
            "validation" => Ok(Self::Validation),
            other => Err(Error::Config(format!(
                "unknown selection '{other}' (training|validation)"
            ))),
        }
    }
}

/// One layer of settings; `None` leaves the value below untouched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<ExperimentKind>,
    pub profile: Option<Profile>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub replicates: Option<usize>,
    pub base_seed: Option<u64>,
    pub out_path: Option<PathBuf>,
    pub select_on: Option<SelectOn>,
    pub methods: Option<Vec<String>>,
    pub t_start: Option<[f64; 2]>,
    pub t_end: Option<[f64; 2]>,
    pub k: Option<usize>,
    pub ratios: Option<Vec<f64>>,
    pub gaps: Option<Vec<f64>>,
    pub search_hidden: Option<Vec<usize>>,
    pub search_lr: Option<Vec<f64>>,
    pub search_inits: Option<usize>,
    pub validation_fraction: Option<f64>,
    pub hidden: Option<usize>,
    pub out_dim: Option<usize>,
    pub lr: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub weight_decay: Option<f64>,
    pub er_p: Option<f64>,
    pub top_k: Option<usize>,
    pub density_points: Option<usize>,
}

impl ConfigFile {
    /// Decodes a flat JSON object; unknown keys are an error.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    /// Reads and decodes a JSON config file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// `self` with every field set in `over` replaced.
    pub fn overlay(self, over: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($field:ident),* $(,)?) => {
                ConfigFile { $($field: over.$field.or(self.$field)),* }
            };
        }
        pick!(
            experiment,
            profile,
            n,
            m,
            replicates,
            base_seed,
            out_path,
            select_on,
            methods,
            t_start,
            t_end,
            k,
            ratios,
            gaps,
            search_hidden,
            search_lr,
            search_inits,
            validation_fraction,
            hidden,
            out_dim,
            lr,
            max_epochs,
            patience,
            weight_decay,
            er_p,
            top_k,
            density_points,
        )
    }
}

/// Fully resolved settings of one campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub profile: Profile,
    pub n: usize,
    /// Labelled nodes (unused by exp2, which derives it from `ratios`).
    pub m: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub out_path: Option<PathBuf>,
    pub methods: Vec<Method>,
    /// Start and end translation of the exp1 path.
    pub t_start: [f64; 2],
    pub t_end: [f64; 2],
    /// Number of exp1 path points.
    pub k: usize,
    /// Labelled fractions `m / n` for exp2.
    pub ratios: Vec<f64>,
    /// Angle gaps (radians) of the exp2 / exp3 geometries.
    pub gaps: Vec<f64>,
    pub search_hidden: Vec<usize>,
    pub search_lr: Vec<f64>,
    pub search_inits: usize,
    pub validation_fraction: f64,
    pub select_on: SelectOn,
    /// GCN settings; the seed is always replaced per replicate.
    pub train: TrainConfig,
    /// Edge probability of the exp4 Erdős–Rényi graph.
    pub er_p: f64,
    /// Eigenvectors compared in exp4.
    pub top_k: usize,
    /// Grid size of the fig1 density curves.
    pub density_points: usize,
}

/// Angle gaps of the exp2 / exp3 geometries: 0, π/32, π/14.
pub fn default_gaps() -> Vec<f64> {
    vec![0.0, PI / 32.0, PI / 14.0]
}

impl ExperimentConfig {
    /// Built-in defaults of `experiment` at `profile`.
    pub fn defaults(experiment: ExperimentKind, profile: Profile) -> Self {
        let quick = profile == Profile::Quick;
        let (n, m, replicates) = match (experiment, quick) {
            (ExperimentKind::Gradcheck, _) => (8, 4, 5),
            (_, true) => (300, 30, 10),
            (ExperimentKind::Exp2, false) => (500, 50, 100),
            (ExperimentKind::Exp4 | ExperimentKind::Fig1, false) => (1000, 100, 1),
            (_, false) => (1000, 100, 100),
        };
        let train = match experiment {
            ExperimentKind::Exp4 => TrainConfig {
                hidden: 4,
                out_dim: 4,
                ..TrainConfig::default()
            },
            _ => TrainConfig::default(),
        };
        Self {
            experiment,
            profile,
            n,
            m,
            replicates,
            base_seed: 0,
            out_path: None,
            methods: experiment.method_menu(),
            t_start: [0.25, 0.97],
            t_end: [0.02, 0.97],
            k: 12,
            ratios: vec![0.02, 0.05, 0.1, 0.3, 0.5, 0.7],
            gaps: default_gaps(),
            search_hidden: vec![2, 4, 8, 16, 32],
            search_lr: vec![0.01, 0.001],
            search_inits: 3,
            validation_fraction: 0.2,
            select_on: SelectOn::Training,
            train,
            er_p: 0.1,
            top_k: 3,
            density_points: 512,
        }
    }

    /// Resolves layered settings; the experiment must be named somewhere.
    pub fn resolve(settings: ConfigFile) -> Result<Self> {
        let experiment = settings
            .experiment
            .ok_or_else(|| Error::Config("no experiment given".into()))?;
        let profile = settings.profile.unwrap_or_default();
        let mut config = Self::defaults(experiment, profile);
        config.apply(settings)?;
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, s: ConfigFile) -> Result<()> {
        macro_rules! set {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = s.$field { self.$field = v; })*
            };
        }
        set!(
            n,
            m,
            replicates,
            base_seed,
            select_on,
            t_start,
            t_end,
            k,
            ratios,
            gaps,
            search_hidden,
            search_lr,
            search_inits,
            validation_fraction,
            er_p,
            top_k,
            density_points,
        );
        if s.out_path.is_some() {
            self.out_path = s.out_path;
        }
        if let Some(tags) = s.methods {
            self.methods = tags
                .iter()
                .map(|t| t.parse())
                .collect::<Result<_>>()
                .map_err(as_config)?;
        }
        let train = &mut self.train;
        if let Some(v) = s.hidden {
            train.hidden = v;
        }
        if let Some(v) = s.out_dim {
            train.out_dim = v;
        }
        if let Some(v) = s.lr {
            train.learning_rate = v;
        }
        if let Some(v) = s.max_epochs {
            train.max_epochs = v;
            // an explicit epoch budget shorter than the default patience
            // just disables early stopping
            train.patience = train.patience.min(v);
        }
        if let Some(v) = s.patience {
            train.patience = v;
        }
        if let Some(v) = s.weight_decay {
            train.weight_decay = v;
        }
        Ok(())
    }

    /// Checks every setting the chosen experiment reads.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        self.train.validate().map_err(as_config)?;
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        let menu = self.experiment.method_menu();
        if let Some(bad) = self.methods.iter().find(|m| !menu.contains(m)) {
            return fail(format!("method {bad} is not available in {}", self.experiment));
        }
        if !menu.is_empty() && self.methods.is_empty() {
            return fail("method list is empty".into());
        }
        match self.experiment {
            ExperimentKind::Gradcheck => {
                if !(2..=16).contains(&self.n) {
                    return fail(format!("gradcheck fixtures need 2 <= n <= 16, got {}", self.n));
                }
                return Ok(());
            }
            ExperimentKind::Exp4 => {
                if self.n < 2 || self.top_k == 0 || self.top_k >= self.n {
                    return fail(format!(
                        "exp4 needs 1 <= top_k < n, got top_k={}, n={}",
                        self.top_k, self.n
                    ));
                }
                if !(0.0..=1.0).contains(&self.er_p) {
                    return fail(format!("edge probability {} outside [0, 1]", self.er_p));
                }
                return Ok(());
            }
            _ => {}
        }
        if self.m == 0 || self.m >= self.n {
            return fail(format!("need 1 <= m < n, got m={}, n={}", self.m, self.n));
        }
        match self.experiment {
            ExperimentKind::Exp1 if self.k < 2 => fail(format!("path needs k >= 2 points, got {}", self.k)),
            ExperimentKind::Exp2 => {
                if self.ratios.is_empty() {
                    return fail("ratio list is empty".into());
                }
                for &ratio in &self.ratios {
                    let m = labelled_count(ratio, self.n);
                    if !(ratio > 0.0 && ratio < 1.0) || m >= self.n {
                        return fail(format!("ratio {ratio} gives m={m} for n={}", self.n));
                    }
                }
                self.check_gaps()
            }
            ExperimentKind::Exp3 => {
                if self.search_hidden.is_empty() || self.search_lr.is_empty() || self.search_inits == 0 {
                    return fail("search grid and initialisation count must be non-empty".into());
                }
                if self.search_hidden.contains(&0) || self.search_lr.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
                    return fail("search grid needs positive hidden sizes and learning rates".into());
                }
                let (train, _) = validation_split(self.m, self.validation_fraction).map_err(as_config)?;
                if train == 0 {
                    return fail(format!("validation split leaves no training nodes (m={})", self.m));
                }
                self.check_gaps()
            }
            ExperimentKind::Fig1 if self.density_points < 2 => {
                fail(format!("density grid needs >= 2 points, got {}", self.density_points))
            }
            _ => Ok(()),
        }
    }

    fn check_gaps(&self) -> Result<()> {
        if self.gaps.is_empty() {
            return Err(Error::Config("gap list is empty".into()));
        }
        if let Some(g) = self
            .gaps
            .iter()
            .find(|g| !(g.is_finite() && **g >= 0.0 && **g < PI / 2.0))
        {
            return Err(Error::Config(format!("angle gap {g} outside [0, π/2)")));
        }
        Ok(())
    }
}

/// `max(round(ratio · n), 2)` labelled nodes.
pub fn labelled_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64).round() as usize).max(2)
}

/// `(training, validation)` sizes of the `m` labelled nodes; the validation
/// part is `round(fraction · m)` and must hold at least one node.
pub fn validation_split(m: usize, fraction: f64) -> Result<(usize, usize)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "validation fraction {fraction} outside (0, 1)"
        )));
    }
    let val = (fraction * m as f64).round() as usize;
    if val == 0 {
        return Err(Error::Parameter(format!(
            "validation split of {fraction} x {m} labelled nodes is empty"
        )));
    }
    Ok((m - val.min(m), val))
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}
