#![allow(dead_code)]

use std::path::PathBuf;

use causal_twin::model::{default_channel_names, CausalFactors};
use causal_twin::statespace::state_layout;
use nalgebra::{DMatrix, DVector};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Lower-triangular chain B1 -> B2 -> B3 -> B4 with AR diagonal and two lagged links from B4.
pub fn chain_model() -> CausalFactors {
    let mut s0 = DMatrix::zeros(4, 4);
    s0[(1, 0)] = 0.4;
    s0[(2, 1)] = 0.3;
    s0[(3, 2)] = 0.5;
    let mut s1 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.5, 0.6, 0.64]));
    s1[(0, 3)] = 0.2;
    s1[(1, 3)] = 0.2;
    CausalFactors::new(s0, vec![s1], default_channel_names(4)).unwrap()
}

pub fn diagonal_model(diag: &[f64]) -> CausalFactors {
    let g = diag.len();
    CausalFactors::new(
        DMatrix::zeros(g, g),
        vec![DMatrix::from_diagonal(&DVector::from_column_slice(diag))],
        default_channel_names(g),
    )
    .unwrap()
}

/// Largest absolute difference over every factor slot.
pub fn max_abs_delta(a: &CausalFactors, b: &CausalFactors) -> f64 {
    let layout = state_layout(a.channels(), a.lag_order()).unwrap();
    layout
        .entries()
        .iter()
        .map(|id| (a.get(id.effect, id.cause, id.lag) - b.get(id.effect, id.cause, id.lag)).abs())
        .fold(0.0, f64::max)
}

/// Lag-1 sample autocorrelation.
pub fn autocorrelation(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}
