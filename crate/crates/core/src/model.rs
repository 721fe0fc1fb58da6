//! Shared domain types: the multi-channel series, causal factor matrices and
//! the estimation configuration.
//!
//! Matrix convention used everywhere in the crate: entry `[(i, j)]` of the
//! structural or a lagged matrix is the factor from cause channel `j` to
//! effect channel `i` (row = effect, column = cause).

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default channel labels `B1..BG`.
pub fn default_channel_names(channels: usize) -> Vec<String> {
    (1..=channels).map(|i| format!("B{i}")).collect()
}

fn check_names(names: &[String], expected: usize) -> Result<()> {
    if names.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{} channel names for {} channels",
            names.len(),
            expected
        )));
    }
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::InvalidConfig(format!("duplicate channel name '{name}'")));
        }
    }
    Ok(())
}

/// An N x G matrix of samples, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelSeries {
    data: DMatrix<f64>,
    channel_names: Vec<String>,
    sample_interval: Option<f64>,
}

impl MultiChannelSeries {
    pub fn new(data: DMatrix<f64>, channel_names: Vec<String>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidDimension(format!(
                "series must have at least one sample and one channel, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        check_names(&channel_names, data.ncols())?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (n, g) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::NonFinite(format!("sample {n}, channel {g}")));
        }
        Ok(Self {
            data,
            channel_names,
            sample_interval: None,
        })
    }

    /// Builds a series from row-major samples with default channel names.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let g = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != g) {
            return Err(Error::InconsistentColumnCount {
                line: i + 1,
                expected: g,
                found: r.len(),
            });
        }
        let data = DMatrix::from_fn(rows.len(), g, |n, c| rows[n][c]);
        Self::new(data, default_channel_names(g))
    }

    pub fn with_sample_interval(mut self, seconds: f64) -> Self {
        self.sample_interval = Some(seconds);
        self
    }

    pub fn with_channel_names(mut self, names: Vec<String>) -> Result<Self> {
        check_names(&names, self.channels())?;
        self.channel_names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn sample_interval(&self) -> Option<f64> {
        self.sample_interval
    }

    pub fn value(&self, n: usize, channel: usize) -> f64 {
        self.data[(n, channel)]
    }

    /// Sample `n` as a G-vector.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        self.data.row(n).iter().copied().collect()
    }

    pub fn channel(&self, channel: usize) -> Vec<f64> {
        self.data.column(channel).iter().copied().collect()
    }
}

/// Structural matrix S0 and lagged matrices S1..SD.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalFactors {
    structural: DMatrix<f64>,
    lagged: Vec<DMatrix<f64>>,
    channel_names: Vec<String>,
}

impl CausalFactors {
    /// Constructs and validates.
    pub fn new(structural: DMatrix<f64>, lagged: Vec<DMatrix<f64>>, channel_names: Vec<String>) -> Result<Self> {
        validate_factors(Self {
            structural,
            lagged,
            channel_names,
        })
    }

    /// All-zero factors for `names.len()` channels and `lag_order` lags.
    pub fn zeros(channel_names: Vec<String>, lag_order: usize) -> Self {
        let g = channel_names.len();
        Self {
            structural: DMatrix::zeros(g, g),
            lagged: vec![DMatrix::zeros(g, g); lag_order],
            channel_names,
        }
    }

    /// Row-major convenience constructor with default channel names.
    pub fn from_rows(structural: &[Vec<f64>], lagged: &[Vec<Vec<f64>>]) -> Result<Self> {
        let to_matrix = |rows: &[Vec<f64>]| -> Result<DMatrix<f64>> {
            let g = rows.len();
            if rows.iter().any(|r| r.len() != g) {
                return Err(Error::DimensionMismatch("matrix rows are ragged".into()));
            }
            Ok(DMatrix::from_fn(g, g, |i, j| rows[i][j]))
        };
        let s0 = to_matrix(structural)?;
        let lagged = lagged.iter().map(|m| to_matrix(m)).collect::<Result<Vec<_>>>()?;
        let names = default_channel_names(s0.nrows());
        Self::new(s0, lagged, names)
    }

    pub fn channels(&self) -> usize {
        self.structural.nrows()
    }

    pub fn lag_order(&self) -> usize {
        self.lagged.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn structural(&self) -> &DMatrix<f64> {
        &self.structural
    }

    /// Lagged matrices ordered by lag: element 0 is S1.
    pub fn lagged(&self) -> &[DMatrix<f64>] {
        &self.lagged
    }

    /// Factor from `cause` to `effect` at `lag` (0 = structural).
    pub fn get(&self, effect: usize, cause: usize, lag: usize) -> f64 {
        if lag == 0 {
            self.structural[(effect, cause)]
        } else {
            self.lagged[lag - 1][(effect, cause)]
        }
    }

    /// Applies `f` to every entry, keeping the structural diagonal at zero.
    pub fn map_entries(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut structural = self.structural.map(&mut f);
        structural.fill_diagonal(0.0);
        Self {
            structural,
            lagged: self.lagged.iter().map(|m| m.map(&mut f)).collect(),
            channel_names: self.channel_names.clone(),
        }
    }

    pub fn with_channel_names(mut self, names: Vec<String>) -> Result<Self> {
        check_names(&names, self.channels())?;
        self.channel_names = names;
        Ok(self)
    }

    /// Number of nonzero entries as (structural, self-lagged, inter-lagged).
    pub fn nonzero_counts(&self) -> (usize, usize, usize) {
        let ins = self.structural.iter().filter(|v| **v != 0.0).count();
        let mut snl = 0;
        let mut inl = 0;
        for m in &self.lagged {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if m[(i, j)] != 0.0 {
                        if i == j {
                            snl += 1;
                        } else {
                            inl += 1;
                        }
                    }
                }
            }
        }
        (ins, snl, inl)
    }
}

/// Checks shape consistency, finiteness and the zero structural diagonal.
pub fn validate_factors(f: CausalFactors) -> Result<CausalFactors> {
    let g = f.structural.nrows();
    if g == 0 || f.structural.ncols() != g {
        return Err(Error::DimensionMismatch(format!(
            "structural matrix is {}x{}",
            f.structural.nrows(),
            f.structural.ncols()
        )));
    }
    for (d, m) in f.lagged.iter().enumerate() {
        if m.nrows() != g || m.ncols() != g {
            return Err(Error::DimensionMismatch(format!(
                "lagged matrix {} is {}x{}, expected {g}x{g}",
                d + 1,
                m.nrows(),
                m.ncols()
            )));
        }
    }
    check_names(&f.channel_names, g)?;
    if f.structural.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("structural matrix".into()));
    }
    if let Some(d) = f.lagged.iter().position(|m| m.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!("lagged matrix {}", d + 1)));
    }
    if let Some(channel) = (0..g).find(|&i| f.structural[(i, i)] != 0.0) {
        return Err(Error::SelfStructuralCausality { channel });
    }
    Ok(f)
}

/// Elements of the 2x2 transition block `[[alpha, beta], [0, gamma]]`, the
/// noise-loading block `diag(delta, epsilon)`, and the noise variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub process_noise_variance: f64,
    pub measurement_noise_variance: f64,
    pub initial_state_variance: f64,
}

impl Default for Hyperparameters {
    /// Random walk on each factor value; the slope component is carried but
    /// neither driven nor fed back.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            gamma: 1.0,
            delta: 1.0,
            epsilon: 0.0,
            process_noise_variance: 1e-6,
            measurement_noise_variance: 1.0,
            initial_state_variance: 1e3,
        }
    }
}

impl Hyperparameters {
    /// Integrated random walk: the slope random-walks and integrates into the value.
    pub fn integrated_random_walk(process_noise_variance: f64) -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            delta: 0.0,
            epsilon: 1.0,
            process_noise_variance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.epsilon,
            self.process_noise_variance,
            self.measurement_noise_variance,
            self.initial_state_variance,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hyperparameters".into()));
        }
        if self.process_noise_variance < 0.0 {
            return Err(Error::InvalidConfig("process_noise_variance must be >= 0".into()));
        }
        if self.measurement_noise_variance <= 0.0 {
            return Err(Error::InvalidConfig("measurement_noise_variance must be > 0".into()));
        }
        if self.initial_state_variance <= 0.0 {
            return Err(Error::InvalidConfig("initial_state_variance must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    pub lag_order: usize,
    pub hyper: Hyperparameters,
    /// Posterior samples averaged to obtain the converged factors.
    pub tail_window: usize,
    /// Factors with magnitude <= threshold are zeroed.
    pub threshold: f64,
    pub standardize: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            lag_order: 1,
            hyper: Hyperparameters::default(),
            tail_window: 5000,
            threshold: 0.1,
            standardize: true,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lag_order < 1 {
            return Err(Error::InvalidConfig("lag_order must be >= 1".into()));
        }
        if self.tail_window < 1 {
            return Err(Error::InvalidConfig("tail_window must be >= 1".into()));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidConfig("threshold must be >= 0".into()));
        }
        self.hyper.validate()
    }
}
