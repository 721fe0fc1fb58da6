//! Generative structural VAR simulator.
//!
//! `y[n] = (I - S0)^-1 (sum_d Sd y[n-d] + B e[n])`, `e[n] ~ N(0, I)`, with
//! `B = diag(noise_scale)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{CausalFactors, MultiChannelSeries};

const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub factors: CausalFactors,
    /// Diagonal of B. Zero entries make a channel noise-free.
    pub noise_scale: Vec<f64>,
    pub length: usize,
    pub seed: u64,
    pub burn_in: usize,
    /// Optional y[-1], y[-2], .., y[-D] (first element is the most recent).
    pub initial: Option<Vec<Vec<f64>>>,
}

impl SynthSpec {
    pub fn new(factors: CausalFactors, noise_scale: Vec<f64>, length: usize, seed: u64) -> Self {
        Self {
            factors,
            noise_scale,
            length,
            seed,
            burn_in: 500,
            initial: None,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_initial(mut self, initial: Vec<Vec<f64>>) -> Self {
        self.initial = Some(initial);
        self
    }
}

/// `(I - S0)^-1`, rejecting ill-conditioned structure.
pub fn structural_inverse(factors: &CausalFactors) -> Result<DMatrix<f64>> {
    let g = factors.channels();
    let m = DMatrix::identity(g, g) - factors.structural();
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularStructure { condition });
    }
    m.try_inverse().ok_or(Error::SingularStructure { condition })
}

/// Reduced-form lag matrices `(I - S0)^-1 Sd`, d = 1..D.
pub fn reduced_form(factors: &CausalFactors) -> Result<Vec<DMatrix<f64>>> {
    let inv = structural_inverse(factors)?;
    Ok(factors.lagged().iter().map(|s| &inv * s).collect())
}

/// DG x DG companion matrix of the reduced form.
pub fn companion_matrix(factors: &CausalFactors) -> Result<DMatrix<f64>> {
    let g = factors.channels();
    let d = factors.lag_order();
    let reduced = reduced_form(factors)?;
    let mut c = DMatrix::zeros(d * g, d * g);
    for (k, m) in reduced.iter().enumerate() {
        c.view_mut((0, k * g), (g, g)).copy_from(m);
    }
    for k in 1..d {
        c.view_mut((k * g, (k - 1) * g), (g, g))
            .copy_from(&DMatrix::<f64>::identity(g, g));
    }
    Ok(c)
}

/// Spectral radius of the reduced-form companion matrix; `< 1` means stationary.
pub fn stability_check(factors: &CausalFactors) -> Result<f64> {
    if factors.lag_order() == 0 {
        structural_inverse(factors)?;
        return Ok(0.0);
    }
    let c = companion_matrix(factors)?;
    let eig = c.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn simulate(spec: &SynthSpec) -> Result<MultiChannelSeries> {
    let g = spec.factors.channels();
    let d = spec.factors.lag_order();
    if spec.noise_scale.len() != g {
        return Err(Error::DimensionMismatch(format!(
            "{} noise scales for {g} channels",
            spec.noise_scale.len()
        )));
    }
    if spec.noise_scale.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
        return Err(Error::InvalidConfig("noise scales must be finite and >= 0".into()));
    }
    if spec.length == 0 {
        return Err(Error::InvalidDimension("length must be >= 1".into()));
    }
    let radius = stability_check(&spec.factors)?;
    if radius >= 1.0 {
        return Err(Error::UnstableModel { radius });
    }
    let inv = structural_inverse(&spec.factors)?;
    let reduced: Vec<DMatrix<f64>> = spec.factors.lagged().iter().map(|s| &inv * s).collect();
    let loading = &inv * DMatrix::from_diagonal(&DVector::from_column_slice(&spec.noise_scale));

    // history[0] is the most recent sample
    let mut history: Vec<DVector<f64>> = match &spec.initial {
        Some(init) => {
            if init.len() != d || init.iter().any(|v| v.len() != g) {
                return Err(Error::DimensionMismatch(format!(
                    "initial condition needs {d} vectors of {g} channels"
                )));
            }
            init.iter().map(|v| DVector::from_column_slice(v)).collect()
        }
        None => vec![DVector::zeros(g); d],
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.burn_in + spec.length;
    let mut data = DMatrix::zeros(spec.length, g);
    let mut e = DVector::zeros(g);
    for n in 0..total {
        for v in e.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut y = &loading * &e;
        for (m, past) in reduced.iter().zip(&history) {
            y += m * past;
        }
        if n >= spec.burn_in {
            data.row_mut(n - spec.burn_in).copy_from(&y.transpose());
        }
        if d > 0 {
            history.rotate_right(1);
            history[0] = y;
        }
    }
    MultiChannelSeries::new(data, spec.factors.channel_names().to_vec())
}
