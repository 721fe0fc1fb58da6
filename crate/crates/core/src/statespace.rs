//! Augmented state-space construction.
//!
//! Every causal factor is carried as a two-component state slot
//! `(value, slope)`. Slot `i` occupies state columns `2i` (value) and `2i + 1`
//! (slope). Factor order is effect-major: for each effect channel, its
//! structural causes in ascending channel order, then lag-1 causes
//! `0..G`, then lag-2 causes, and so on.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Hyperparameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FactorKind {
    /// Self-node lagged.
    Snl,
    /// Inter-node lagged.
    Inl,
    /// Inter-node structural (instantaneous).
    Ins,
}

impl FactorKind {
    pub fn label(self) -> &'static str {
        match self {
            FactorKind::Snl => "SNL",
            FactorKind::Inl => "INL",
            FactorKind::Ins => "INS",
        }
    }

    pub fn is_lagged(self) -> bool {
        !matches!(self, FactorKind::Ins)
    }
}

impl std::fmt::Display for FactorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactorId {
    pub effect: usize,
    pub cause: usize,
    /// 0 for structural, d >= 1 for lagged.
    pub lag: usize,
}

impl FactorId {
    pub fn new(effect: usize, cause: usize, lag: usize) -> Self {
        Self { effect, cause, lag }
    }

    pub fn kind(&self) -> FactorKind {
        match (self.lag, self.effect == self.cause) {
            (0, _) => FactorKind::Ins,
            (_, true) => FactorKind::Snl,
            (_, false) => FactorKind::Inl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    channels: usize,
    lag_order: usize,
    entries: Vec<FactorId>,
    index: HashMap<FactorId, usize>,
}

/// Factor ordering for `channels` channels and `lag_order` lags.
pub fn state_layout(channels: usize, lag_order: usize) -> Result<StateLayout> {
    if channels < 1 || lag_order < 1 {
        return Err(Error::InvalidDimension(format!(
            "state layout needs G >= 1 and D >= 1, got G={channels}, D={lag_order}"
        )));
    }
    let mut entries = Vec::with_capacity(channels * ((lag_order + 1) * channels - 1));
    for effect in 0..channels {
        entries.extend(
            (0..channels)
                .filter(|&c| c != effect)
                .map(|cause| FactorId::new(effect, cause, 0)),
        );
        for lag in 1..=lag_order {
            entries.extend((0..channels).map(|cause| FactorId::new(effect, cause, lag)));
        }
    }
    let index = entries.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    Ok(StateLayout {
        channels,
        lag_order,
        entries,
        index,
    })
}

impl StateLayout {
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn lag_order(&self) -> usize {
        self.lag_order
    }

    /// F = G * ((D + 1) * G - 1).
    pub fn factor_count(&self) -> usize {
        self.entries.len()
    }

    /// Length of the augmented state vector, 2F.
    pub fn state_dim(&self) -> usize {
        2 * self.entries.len()
    }

    /// Factors that explain one effect channel: (D + 1) * G - 1.
    pub fn factors_per_channel(&self) -> usize {
        (self.lag_order + 1) * self.channels - 1
    }

    pub fn entries(&self) -> &[FactorId] {
        &self.entries
    }

    pub fn factor(&self, index: usize) -> FactorId {
        self.entries[index]
    }

    pub fn index_of(&self, id: FactorId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Factor indices belonging to `effect`.
    pub fn block(&self, effect: usize) -> Range<usize> {
        let per = self.factors_per_channel();
        effect * per..(effect + 1) * per
    }

    pub fn count_by_kind(&self, kind: FactorKind) -> usize {
        self.entries.iter().filter(|id| id.kind() == kind).count()
    }
}

/// Block-diagonal transition and process-noise model: F identical 2x2 blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    block_transition: Matrix2<f64>,
    block_noise: Matrix2<f64>,
    factor_count: usize,
}

pub fn build_transition(hyper: &Hyperparameters, layout: &StateLayout) -> TransitionModel {
    let q = hyper.process_noise_variance;
    let (d, e) = (hyper.delta, hyper.epsilon);
    TransitionModel {
        block_transition: Matrix2::new(hyper.alpha, hyper.beta, 0.0, hyper.gamma),
        // D0 * q * D0^T with D0 = diag(delta, epsilon)
        block_noise: Matrix2::new(d * d * q, d * e * q, d * e * q, e * e * q),
        factor_count: layout.factor_count(),
    }
}

impl TransitionModel {
    pub fn block_transition(&self) -> &Matrix2<f64> {
        &self.block_transition
    }

    pub fn block_noise(&self) -> &Matrix2<f64> {
        &self.block_noise
    }

    pub fn factor_count(&self) -> usize {
        self.factor_count
    }

    pub fn state_dim(&self) -> usize {
        2 * self.factor_count
    }

    /// Dense 2F x 2F transition matrix.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        block_diagonal(&self.block_transition, self.factor_count)
    }

    /// Dense 2F x 2F process-noise covariance.
    pub fn noise_covariance(&self) -> DMatrix<f64> {
        block_diagonal(&self.block_noise, self.factor_count)
    }
}

fn block_diagonal(block: &Matrix2<f64>, count: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * count, 2 * count);
    for b in 0..count {
        m.fixed_view_mut::<2, 2>(2 * b, 2 * b).copy_from(block);
    }
    m
}

/// G x 2F observation matrix for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    h: DMatrix<f64>,
}

impl ObservationMatrix {
    pub fn zeros(layout: &StateLayout) -> Self {
        Self {
            h: DMatrix::zeros(layout.channels(), layout.state_dim()),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Overwrites the value columns from `regressor(cause, lag)`, which returns
    /// `y_cause[n - lag]`.
    pub(crate) fn fill(&mut self, layout: &StateLayout, regressor: impl Fn(usize, usize) -> f64) {
        self.h.fill(0.0);
        for (i, id) in layout.entries().iter().enumerate() {
            self.h[(id.effect, 2 * i)] = regressor(id.cause, id.lag);
        }
    }
}

/// `window[0]` is y[n], `window[d]` is y[n - d].
pub fn build_observation(window: &[Vec<f64>], layout: &StateLayout) -> Result<ObservationMatrix> {
    let needed = layout.lag_order() + 1;
    if window.len() < needed {
        return Err(Error::IncompleteWindow {
            needed,
            got: window.len(),
        });
    }
    let g = layout.channels();
    if let Some(bad) = window[..needed].iter().find(|s| s.len() != g) {
        return Err(Error::DimensionMismatch(format!(
            "window sample has {} channels, expected {g}",
            bad.len()
        )));
    }
    let mut obs = ObservationMatrix::zeros(layout);
    obs.fill(layout, |cause, lag| window[lag][cause]);
    Ok(obs)
}
