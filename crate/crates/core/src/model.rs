//! Kernel functions and fitness sampling shared by the simulator and the
//! analytic modules.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::curves::EmpiricalCurves;
use crate::error::{Error, Result};
use crate::params::{KernelNorm, ModelParams};

/// P0 as a function of the cumulative citation count, K clamped at 1 inside
/// the logarithm.
pub fn p0_of_k(k: u64, params: &ModelParams) -> f64 {
    p0_of_k_real(k as f64, params)
}

pub(crate) fn p0_of_k_real(k: f64, params: &ModelParams) -> f64 {
    params.p0_base * (1.0 + params.p0_slope * k.max(1.0).log10())
}

/// P0 as a function of path multiplicity s.
pub fn p0_of_s(s: f64) -> Result<f64> {
    if !(s >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "multiplicity s={s} is below 1"
        )));
    }
    Ok(0.44 * (1.0 + 3.0 * (s - 1.0)))
}

/// Second-generation multiplier F(t), extrapolated past the table at rate
/// gamma - beta.
pub fn extend_f(curves: &EmpiricalCurves, params: &ModelParams, t: usize) -> Result<f64> {
    if t < 1 {
        return Err(Error::OutOfRange("F is indexed from t=1".into()));
    }
    let table = curves.f_table();
    if t <= table.len() {
        return Ok(table[t - 1]);
    }
    let last = table.len();
    Ok(table[last - 1] * (-params.f_decay() * (t - last) as f64).exp())
}

/// Sum of F over all lags, including the geometric tail beyond the table.
pub fn f_total(curves: &EmpiricalCurves, params: &ModelParams) -> f64 {
    let table = curves.f_table();
    let head: f64 = table.iter().sum();
    let r = (-params.f_decay()).exp();
    head + table[table.len() - 1] * r / (1.0 - r)
}

/// Multiplier applied to F under the configured normalization.
pub fn kernel_scale(curves: &EmpiricalCurves, params: &ModelParams) -> f64 {
    match params.kernel_norm {
        KernelNorm::Table => 1.0,
        KernelNorm::Branching => params.q_prefactor / (params.gamma * f_total(curves, params)),
    }
}

/// Latent-rate contribution of one citation `dt` years back when the paper
/// has `k` cumulative citations.
pub fn kernel_value(
    dt: usize,
    k: u64,
    params: &ModelParams,
    curves: &EmpiricalCurves,
) -> Result<f64> {
    if dt < 1 {
        return Err(Error::InvalidInput(
            "kernel lag must be >= 1 (no same-year triggering)".into(),
        ));
    }
    Ok(p0_of_k(k, params) * extend_f(curves, params, dt)? * kernel_scale(curves, params))
}

/// Kernel with the lag profile tabulated once, for inner loops.
#[derive(Debug, Clone)]
pub struct Kernel {
    lag_weights: Vec<f64>,
    p0_base: f64,
    p0_slope: f64,
}

impl Kernel {
    pub fn new(params: &ModelParams, curves: &EmpiricalCurves, max_lag: usize) -> Result<Self> {
        let scale = kernel_scale(curves, params);
        let lag_weights = (1..=max_lag)
            .map(|dt| extend_f(curves, params, dt).map(|f| f * scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(Kernel {
            lag_weights,
            p0_base: params.p0_base,
            p0_slope: params.p0_slope,
        })
    }

    /// Scaled F for lag `dt` (1-based).
    #[inline]
    pub fn lag_weight(&self, dt: usize) -> f64 {
        self.lag_weights[dt - 1]
    }

    #[inline]
    pub fn p0(&self, k: u64) -> f64 {
        self.p0_base * (1.0 + self.p0_slope * (k.max(1) as f64).log10())
    }

    pub fn max_lag(&self) -> usize {
        self.lag_weights.len()
    }
}

/// One fitness draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessSample {
    pub eta: f64,
}

/// Lognormal fitness draw, exp(mu + sigma·z) with z standard normal.
/// `sigma = 0` gives e^mu exactly.
pub fn sample_fitness<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64) -> Result<FitnessSample> {
    if !(sigma >= 0.0) || !mu.is_finite() || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lognormal needs finite mu and sigma >= 0 (mu={mu}, sigma={sigma})"
        )));
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(FitnessSample {
        eta: (mu + sigma * z).exp(),
    })
}
