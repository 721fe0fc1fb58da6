//! Time-varying Kalman filter over the augmented factor state.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{EstimationConfig, MultiChannelSeries};
use crate::statespace::{build_transition, state_layout, ObservationMatrix, StateLayout, TransitionModel};

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Sample index of the last processed measurement.
    pub step: usize,
}

impl FilterState {
    /// Zero mean with isotropic covariance `variance * I`.
    pub fn initial(dim: usize, variance: f64) -> Self {
        Self {
            mean: DVector::zeros(dim),
            covariance: DMatrix::identity(dim, dim) * variance,
            step: 0,
        }
    }

    /// `||P - P^T||_inf / ||P||_inf` (infinity norm = max absolute row sum).
    pub fn relative_asymmetry(&self) -> f64 {
        let p = &self.covariance;
        let norm = inf_norm(p);
        if norm == 0.0 {
            return 0.0;
        }
        inf_norm(&(p - p.transpose())) / norm
    }

    /// Smallest eigenvalue of the symmetric part of P divided by the mean
    /// diagonal entry (trace / dim).
    pub fn min_eigenvalue_ratio(&self) -> f64 {
        let p = &self.covariance;
        let n = p.nrows().max(1) as f64;
        let scale = p.trace() / n;
        let sym = (p + p.transpose()) * 0.5;
        let min = sym
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if scale == 0.0 {
            min
        } else {
            min / scale
        }
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
}

/// Time update: `mean' = A mean`, `P' = A P A^T + Q`.
pub fn predict(fs: &FilterState, tm: &TransitionModel) -> Result<FilterState> {
    let dim = tm.state_dim();
    if fs.mean.len() != dim || fs.covariance.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "filter state has dimension {}, transition model {dim}",
            fs.mean.len()
        )));
    }
    let mut next = fs.clone();
    predict_in_place(&mut next, tm);
    Ok(next)
}

/// Exploits the 2x2 block-diagonal structure of A and Q: O(n^2) per step.
fn predict_in_place(fs: &mut FilterState, tm: &TransitionModel) {
    let a = tm.block_transition();
    let q = tm.block_noise();
    let p = &mut fs.covariance;
    let n = p.nrows();
    for b in 0..tm.factor_count() {
        let (i0, i1) = (2 * b, 2 * b + 1);
        let (m0, m1) = (fs.mean[i0], fs.mean[i1]);
        fs.mean[i0] = a[(0, 0)] * m0 + a[(0, 1)] * m1;
        fs.mean[i1] = a[(1, 0)] * m0 + a[(1, 1)] * m1;
        // rows: P <- A P
        for c in 0..n {
            let (r0, r1) = (p[(i0, c)], p[(i1, c)]);
            p[(i0, c)] = a[(0, 0)] * r0 + a[(0, 1)] * r1;
            p[(i1, c)] = a[(1, 0)] * r0 + a[(1, 1)] * r1;
        }
    }
    for b in 0..tm.factor_count() {
        let (j0, j1) = (2 * b, 2 * b + 1);
        // columns: P <- P A^T
        for r in 0..n {
            let (c0, c1) = (p[(r, j0)], p[(r, j1)]);
            p[(r, j0)] = a[(0, 0)] * c0 + a[(0, 1)] * c1;
            p[(r, j1)] = a[(1, 0)] * c0 + a[(1, 1)] * c1;
        }
        p[(j0, j0)] += q[(0, 0)];
        p[(j0, j1)] += q[(0, 1)];
        p[(j1, j0)] += q[(1, 0)];
        p[(j1, j1)] += q[(1, 1)];
    }
    symmetrize(p);
}

/// Measurement update with a Joseph-form covariance. Returns the posterior
/// and the innovation `y - H mean`.
pub fn update(
    fs: &FilterState,
    h: &ObservationMatrix,
    y: &DVector<f64>,
    r: &DMatrix<f64>,
) -> Result<(FilterState, DVector<f64>)> {
    let hm = h.matrix();
    let dim = fs.mean.len();
    let g = y.len();
    if hm.shape() != (g, dim) || r.shape() != (g, g) || fs.covariance.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "H is {:?}, y has {g} entries, R is {:?}, state has {dim}",
            hm.shape(),
            r.shape()
        )));
    }
    let mut next = fs.clone();
    let (innovation, _) = update_in_place(&mut next, hm, y, r)?;
    Ok((next, innovation))
}

/// Returns the innovation and the trace of the innovation covariance.
fn update_in_place(
    fs: &mut FilterState,
    h: &DMatrix<f64>,
    y: &DVector<f64>,
    r: &DMatrix<f64>,
) -> Result<(DVector<f64>, f64)> {
    let singular = || Error::SingularInnovationCovariance { step: None };
    let innovation = y - h * &fs.mean;
    let p = &fs.covariance;
    // U = P H^T, S = H P H^T + R
    let u = p * h.transpose();
    let s = h * &u + r;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    let s_trace = s.trace();
    let chol = Cholesky::new(s).ok_or_else(singular)?;
    let l_diag = chol.l_dirty().diagonal();
    let (dmin, dmax) = l_diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !(dmin > 0.0) || dmin * dmin < dmax * dmax * 1e-14 {
        return Err(singular());
    }
    // K = U S^-1, solved as S K^T = U^T
    let k = chol.solve(&u.transpose()).transpose();
    fs.mean += &k * &innovation;
    // (I - KH) P (I - KH)^T + K R K^T, associated as W - (W H^T) K^T with W = (I - KH) P
    let w = p - &k * u.transpose();
    let mut next = &w - (&w * h.transpose()) * k.transpose() + &k * r * k.transpose();
    symmetrize(&mut next);
    fs.covariance = next;
    Ok((innovation, s_trace))
}

/// Filter output: one row per sample. Rows before `first_update` hold the
/// prior (no measurement was processed there).
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    /// N x F posterior value components.
    pub values: DMatrix<f64>,
    /// N x F posterior slope components.
    pub slopes: DMatrix<f64>,
    /// N x G innovations.
    pub innovations: DMatrix<f64>,
    pub innovation_covariance_trace: Vec<f64>,
    pub layout: StateLayout,
    pub first_update: usize,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of rows carrying a posterior.
    pub fn posterior_len(&self) -> usize {
        self.len() - self.first_update
    }

    /// Value components of the last posterior.
    pub fn final_values(&self) -> Vec<f64> {
        self.values.row(self.len() - 1).iter().copied().collect()
    }
}

pub fn run_filter(series: &MultiChannelSeries, cfg: &EstimationConfig) -> Result<StateTrajectory> {
    run_filter_with(series, cfg, |_| {})
}

/// As [`run_filter`], calling `inspect` with each posterior.
pub fn run_filter_with(
    series: &MultiChannelSeries,
    cfg: &EstimationConfig,
    mut inspect: impl FnMut(&FilterState),
) -> Result<StateTrajectory> {
    cfg.validate()?;
    let d = cfg.lag_order;
    let n_samples = series.len();
    if n_samples <= d {
        return Err(Error::SeriesTooShort {
            len: n_samples,
            needed: d + 1,
        });
    }
    let g = series.channels();
    let layout = state_layout(g, d)?;
    let f = layout.factor_count();
    let tm = build_transition(&cfg.hyper, &layout);
    let r = DMatrix::identity(g, g) * cfg.hyper.measurement_noise_variance;

    let mut fs = FilterState::initial(layout.state_dim(), cfg.hyper.initial_state_variance);
    let mut values = DMatrix::zeros(n_samples, f);
    let mut slopes = DMatrix::zeros(n_samples, f);
    let mut innovations = DMatrix::zeros(n_samples, g);
    let mut traces = vec![0.0; n_samples];
    let mut obs = ObservationMatrix::zeros(&layout);
    let data = series.data();

    for n in d..n_samples {
        predict_in_place(&mut fs, &tm);
        obs.fill(&layout, |cause, lag| data[(n - lag, cause)]);
        let y = DVector::from_iterator(g, data.row(n).iter().copied());
        let (innovation, trace) = update_in_place(&mut fs, obs.matrix(), &y, &r).map_err(|e| match e {
            Error::SingularInnovationCovariance { .. } => Error::SingularInnovationCovariance { step: Some(n) },
            other => other,
        })?;
        fs.step = n;
        for i in 0..f {
            values[(n, i)] = fs.mean[2 * i];
            slopes[(n, i)] = fs.mean[2 * i + 1];
        }
        innovations.row_mut(n).copy_from(&innovation.transpose());
        traces[n] = trace;
        inspect(&fs);
    }

    Ok(StateTrajectory {
        values,
        slopes,
        innovations,
        innovation_covariance_trace: traces,
        layout,
        first_update: d,
    })
}
