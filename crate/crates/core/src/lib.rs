//! Causal factor estimation for multi-channel time series.
//!
//! The series is modelled as a structural VAR, `y[n] = S0 y[n] + sum_d Sd y[n-d] + B e[n]`,
//! whose factors are tracked as a time-varying state by a Kalman filter. The
//! converged factors are thresholded and analysed as a ladder graph: edges
//! over the T-1, T, T axes, forbidden structural cycles, feedback loops and
//! causal propositions.
//!
//! Matrices use row = effect, column = cause throughout.

pub mod error;
pub mod io;
pub mod kalman;
pub mod ladder;
pub mod model;
pub mod pipeline;
pub mod statespace;
pub mod synth;

pub use error::{Error, Result};
pub use model::{CausalFactors, EstimationConfig, Hyperparameters, MultiChannelSeries};
pub use pipeline::{estimate, ols_oracle, EstimationResult};
