//! Run configuration: an optional TOML file merged with command-line flags.
//!
//! ```toml
//! lag_order = 1
//! threshold = 0.1
//! tail_window = 5000
//! standardize = true
//! seed = 7
//! out_dir = "out"
//! emit = ["factors-json", "svg", "loops"]
//! format = "auto"
//! inputs = ["data/2004.02.12.10.32.39", "data/day2.csv"]
//!
//! [hyper]
//! process_noise_variance = 1e-6
//! measurement_noise_variance = 1.0
//! initial_state_variance = 1e3
//! ```
//!
//! Every key is optional. Relative paths resolve against the directory that
//! holds the config file.

use std::fs;
use std::path::{Path, PathBuf};

use causal_twin::model::{EstimationConfig, Hyperparameters};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Emit {
    FactorsJson,
    Svg,
    Dot,
    Propositions,
    Loops,
}

/// Input layout. `auto` reads `.csv` files as CSV and anything else as
/// whitespace-separated IMS text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Auto,
    Ims,
    Csv,
}

impl Format {
    pub fn resolve(self, path: &Path) -> Format {
        match self {
            Format::Auto if has_csv_extension(path) => Format::Csv,
            Format::Auto => Format::Ims,
            other => other,
        }
    }
}

pub fn has_csv_extension(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub lag_order: Option<usize>,
    pub threshold: Option<f64>,
    pub tail_window: Option<usize>,
    pub standardize: Option<bool>,
    pub hyper: Option<Hyperparameters>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub emit: Option<Vec<Emit>>,
    pub format: Option<Format>,
    pub inputs: Vec<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::context(path.display(), e))?;
        let mut file: ConfigFile = toml::from_str(&text).map_err(|e| CliError::context(path.display(), e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in file.inputs.iter_mut().chain(file.out_dir.iter_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }
}

/// Estimation flags shared by `estimate` and `verify`.
#[derive(Debug, Clone, Default, Args)]
pub struct EstimationArgs {
    /// Lag order D
    #[arg(long, value_name = "D")]
    pub lag_order: Option<usize>,
    /// Factors with magnitude at or below this level are zeroed
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Posterior samples averaged into the converged factors
    #[arg(long, value_name = "SAMPLES")]
    pub tail_window: Option<usize>,
    /// Estimate on the raw series instead of zero-mean, unit-variance channels
    #[arg(long)]
    pub no_standardize: bool,
    /// Process noise variance q
    #[arg(long, value_name = "Q")]
    pub process_noise: Option<f64>,
    /// Measurement noise variance r
    #[arg(long, value_name = "R")]
    pub measurement_noise: Option<f64>,
    /// Initial state variance p0
    #[arg(long, value_name = "P0")]
    pub init_variance: Option<f64>,
}

impl EstimationArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self, file: &ConfigFile) -> Result<EstimationConfig, CliError> {
        let mut cfg = EstimationConfig::default();
        if let Some(h) = file.hyper {
            cfg.hyper = h;
        }
        cfg.lag_order = self.lag_order.or(file.lag_order).unwrap_or(cfg.lag_order);
        cfg.threshold = self.threshold.or(file.threshold).unwrap_or(cfg.threshold);
        cfg.tail_window = self.tail_window.or(file.tail_window).unwrap_or(cfg.tail_window);
        cfg.standardize = !self.no_standardize && file.standardize.unwrap_or(cfg.standardize);
        if let Some(q) = self.process_noise {
            cfg.hyper.process_noise_variance = q;
        }
        if let Some(r) = self.measurement_noise {
            cfg.hyper.measurement_noise_variance = r;
        }
        if let Some(p0) = self.init_variance {
            cfg.hyper.initial_state_variance = p0;
        }
        cfg.validate().map_err(|e| CliError::new(e.to_string()))?;
        Ok(cfg)
    }
}
