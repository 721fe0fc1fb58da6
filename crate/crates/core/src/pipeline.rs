//! End-to-end estimation and the batch least-squares reference solution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kalman::{run_filter, StateTrajectory};
use crate::model::{CausalFactors, EstimationConfig, MultiChannelSeries};
use crate::statespace::{state_layout, StateLayout};

/// Per-channel affine transform applied before filtering. Identity
/// (mean 0, std 1) when standardization is off.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessing {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Preprocessing {
    pub fn identity(channels: usize) -> Self {
        Self {
            means: vec![0.0; channels],
            stds: vec![1.0; channels],
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    /// Tail-averaged and thresholded.
    pub factors: CausalFactors,
    /// Tail-averaged, before thresholding.
    pub raw_factors: CausalFactors,
    pub trajectory: StateTrajectory,
    pub preprocessing: Preprocessing,
    pub config: EstimationConfig,
    /// Tail window actually averaged after clamping.
    pub tail_window_used: usize,
}

/// Zero-mean, unit-variance channels. Uses the population (1/N) standard deviation.
pub fn standardize(series: &MultiChannelSeries) -> Result<(MultiChannelSeries, Preprocessing)> {
    let n = series.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { len: n, needed: 2 });
    }
    let g = series.channels();
    let mut data = series.data().clone();
    let mut means = Vec::with_capacity(g);
    let mut stds = Vec::with_capacity(g);
    for c in 0..g {
        let mut col = data.column_mut(c);
        let mean = col.iter().sum::<f64>() / n as f64;
        col.add_scalar_mut(-mean);
        let std = (col.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        if !(std > 0.0) || std <= mean.abs() * 1e-14 {
            return Err(Error::ZeroVarianceChannel {
                channel: series.channel_names()[c].clone(),
            });
        }
        col /= std;
        means.push(mean);
        stds.push(std);
    }
    let mut out = MultiChannelSeries::new(data, series.channel_names().to_vec())?;
    if let Some(dt) = series.sample_interval() {
        out = out.with_sample_interval(dt);
    }
    Ok((out, Preprocessing { means, stds }))
}

/// Mean of the last `min(window, available)` posterior value components per factor.
pub fn tail_average(trajectory: &StateTrajectory, window: usize) -> Vec<f64> {
    let used = window.max(1).min(trajectory.posterior_len());
    if used == 0 {
        return vec![0.0; trajectory.values.ncols()];
    }
    let start = trajectory.len() - used;
    trajectory.values.rows(start, used).row_mean().iter().copied().collect()
}

/// Zeroes every entry with `|v| <= level`.
pub fn threshold_factors(raw: &CausalFactors, level: f64) -> CausalFactors {
    raw.map_entries(|v| if v.abs() <= level { 0.0 } else { v })
}

/// Scatters per-factor values into the structural and lagged matrices.
pub fn pack_factors(layout: &StateLayout, values: &[f64], names: Vec<String>) -> Result<CausalFactors> {
    if values.len() != layout.factor_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} factors",
            values.len(),
            layout.factor_count()
        )));
    }
    let g = layout.channels();
    let mut structural = DMatrix::zeros(g, g);
    let mut lagged = vec![DMatrix::zeros(g, g); layout.lag_order()];
    for (id, v) in layout.entries().iter().zip(values) {
        if id.lag == 0 {
            structural[(id.effect, id.cause)] = *v;
        } else {
            lagged[id.lag - 1][(id.effect, id.cause)] = *v;
        }
    }
    CausalFactors::new(structural, lagged, names)
}

/// Flattens factors back into layout order.
pub fn unpack_factors(layout: &StateLayout, factors: &CausalFactors) -> Vec<f64> {
    layout
        .entries()
        .iter()
        .map(|id| factors.get(id.effect, id.cause, id.lag))
        .collect()
}

pub fn estimate(series: &MultiChannelSeries, cfg: &EstimationConfig) -> Result<EstimationResult> {
    cfg.validate()?;
    let d = cfg.lag_order;
    if series.len() <= d + 10 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: d + 11,
        });
    }
    let (working, preprocessing) = if cfg.standardize {
        standardize(series)?
    } else {
        (series.clone(), Preprocessing::identity(series.channels()))
    };
    let trajectory = run_filter(&working, cfg)?;
    let tail_window_used = cfg.tail_window.min((series.len() - d) / 2).max(1);
    let averaged = tail_average(&trajectory, tail_window_used);
    let raw_factors = pack_factors(&trajectory.layout, &averaged, series.channel_names().to_vec())?;
    let factors = threshold_factors(&raw_factors, cfg.threshold);
    Ok(EstimationResult {
        factors,
        raw_factors,
        trajectory,
        preprocessing,
        config: *cfg,
        tail_window_used,
    })
}

/// Per effect channel, ordinary least squares of `y_k[n]` on the other
/// channels at `n` and all channels at `n-1..n-D`, over `n = D..N-1`.
pub fn ols_oracle(series: &MultiChannelSeries, lag_order: usize) -> Result<CausalFactors> {
    let g = series.channels();
    let layout = state_layout(g, lag_order)?;
    let p = layout.factors_per_channel();
    let rows = series.len().saturating_sub(lag_order);
    if rows <= p {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: lag_order + p + 1,
        });
    }
    let data = series.data();
    let mut coefficients = Vec::with_capacity(layout.factor_count());
    let mut x = vec![0.0; p];
    for effect in 0..g {
        let block = &layout.entries()[layout.block(effect)];
        let mut gram = DMatrix::<f64>::zeros(p, p);
        let mut xty = DVector::<f64>::zeros(p);
        for n in lag_order..series.len() {
            for (slot, id) in x.iter_mut().zip(block) {
                *slot = data[(n - id.lag, id.cause)];
            }
            let target = data[(n, effect)];
            for i in 0..p {
                xty[i] += x[i] * target;
                for j in 0..=i {
                    gram[(i, j)] += x[i] * x[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                gram[(j, i)] = gram[(i, j)];
            }
        }
        let eig = gram.clone().symmetric_eigenvalues();
        let max = eig.amax();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if !(max > 0.0) || min <= max * 1e-12 {
            return Err(Error::RankDeficientRegressors { channel: effect });
        }
        let beta = gram
            .cholesky()
            .ok_or(Error::RankDeficientRegressors { channel: effect })?
            .solve(&xty);
        coefficients.extend(beta.iter().copied());
    }
    pack_factors(&layout, &coefficients, series.channel_names().to_vec())
}
