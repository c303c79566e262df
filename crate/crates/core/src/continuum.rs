//! Deterministic continuous-time approximation of the citation dynamics.
//!
//! The kernel P0(K)·F(t-tau) is replaced by q·exp(-gamma·(t-tau)) with
//! q = q_prefactor·P0(K). The direct-citation curve is embedded as a step
//! function: year t's rate m_dir(t) holds on (t-1, t], so the integral
//! over [0, t] equals the yearly sum and m(0) = m_dir(1).

use std::f64::consts::LN_10;

use serde::Serialize;

use crate::curves::EmpiricalCurves;
use crate::error::{Error, Result};
use crate::model::p0_of_k_real;
use crate::params::ModelParams;

/// Substeps per year for curves without an exact integral.
pub const DEFAULT_REFINEMENT: usize = 64;

/// Continuous copying rate q(K).
pub fn q_of_k(k: f64, params: &ModelParams) -> f64 {
    params.q_prefactor * p0_of_k_real(k, params)
}

// (1 - e^-x)/x, stable near 0
fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// A direct-citation rate in continuous time.
pub trait DirectRate {
    fn rate(&self, t: f64) -> f64;

    /// int_0^t m(tau)·exp(-decay·(t - tau)) dtau.
    fn weighted_integral(&self, t: f64, decay: f64) -> f64;

    fn integral(&self, t: f64) -> f64 {
        self.weighted_integral(t, 0.0)
    }
}

/// Yearly table as a step function, integrated exactly.
#[derive(Debug, Clone, Copy)]
pub struct StepRate<'a> {
    pub table: &'a [f64],
}

impl<'a> StepRate<'a> {
    pub fn new(table: &'a [f64]) -> Self {
        StepRate { table }
    }
}

impl DirectRate for StepRate<'_> {
    fn rate(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let year = (t.ceil() as usize).max(1);
        self.table.get(year - 1).copied().unwrap_or(0.0)
    }

    fn weighted_integral(&self, t: f64, decay: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for (j, &m) in self.table.iter().enumerate() {
            let a = j as f64;
            if a >= t {
                break;
            }
            let b = (a + 1.0).min(t);
            let w = b - a;
            sum += m * (-decay * (t - b)).exp() * w * one_minus_exp_over(decay * w);
        }
        sum
    }
}

/// Arbitrary rate function, integrated by the composite trapezoid rule.
pub struct SmoothRate<F: Fn(f64) -> f64> {
    pub f: F,
    /// Substeps per unit time.
    pub refinement: usize,
}

impl<F: Fn(f64) -> f64> SmoothRate<F> {
    pub fn new(f: F) -> Self {
        SmoothRate {
            f,
            refinement: DEFAULT_REFINEMENT,
        }
    }
}

impl<F: Fn(f64) -> f64> DirectRate for SmoothRate<F> {
    fn rate(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn weighted_integral(&self, t: f64, decay: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let n = ((t * self.refinement as f64).ceil() as usize).max(1);
        let h = t / n as f64;
        let g = |tau: f64| (self.f)(tau) * (-decay * (t - tau)).exp();
        let inner: f64 = (1..n).map(|i| g(i as f64 * h)).sum();
        h * (0.5 * (g(0.0) + g(t)) + inner)
    }
}

/// eta·[m(t) + q·int_0^t m(tau)·exp(-(gamma - q)(t - tau)) dtau] for
/// constant q.
pub fn closed_form_rate<M: DirectRate + ?Sized>(
    eta: f64,
    q: f64,
    gamma: f64,
    m: &M,
    t: f64,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "gamma must be > 0, got {gamma}"
        )));
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidInput(format!("q must be >= 0, got {q}")));
    }
    if q == 0.0 {
        return Ok(eta * m.rate(t));
    }
    Ok(eta * (m.rate(t) + q * m.weighted_integral(t, gamma - q)))
}

/// Maximum of g(K) = K(1 - q(K)/gamma) and where q reaches gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaCritical {
    /// g at its maximizer; papers with larger eta run away.
    pub eta_crit: f64,
    /// Maximizer of g over K >= 1.
    pub k_crit: f64,
    /// Smallest K with q(K) >= gamma, where the cascade diverges.
    pub k_divergence: f64,
}

pub fn eta_critical(params: &ModelParams) -> EtaCritical {
    let a = params.q_prefactor * params.p0_base;
    let gamma = params.gamma;
    let slope = params.p0_slope;
    let g = |k: f64| k * (1.0 - q_of_k(k, params) / gamma);
    if a == 0.0 {
        return EtaCritical {
            eta_crit: f64::INFINITY,
            k_crit: f64::INFINITY,
            k_divergence: f64::INFINITY,
        };
    }
    let k_divergence = if a >= gamma {
        1.0
    } else if slope == 0.0 {
        f64::INFINITY
    } else {
        10f64.powf((gamma / a - 1.0) / slope)
    };
    if slope == 0.0 {
        return if a < gamma {
            EtaCritical {
                eta_crit: f64::INFINITY,
                k_crit: f64::INFINITY,
                k_divergence,
            }
        } else {
            EtaCritical {
                eta_crit: 0.0,
                k_crit: 1.0,
                k_divergence,
            }
        };
    }
    // g'(K) = 1 - (q(K) + a·slope/ln10)/gamma
    let c = a * slope / LN_10;
    let k_star = 10f64.powf(((gamma - c) / a - 1.0) / slope);
    let k_crit = k_star.max(1.0);
    EtaCritical {
        eta_crit: g(k_crit).max(0.0),
        k_crit,
        k_divergence,
    }
}

/// Result of the cumulative self-consistency solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CumulativeOutcome {
    Subcritical {
        k: f64,
    },
    /// eta·int m exceeds the maximum of K(1 - q(K)/gamma).
    Runaway {
        rhs: f64,
        eta_crit: f64,
    },
}

/// Solves K(1 - q(K)/gamma) = eta·int_0^t m_dir on the branch below K_crit.
pub fn cumulative_approx(
    eta: f64,
    params: &ModelParams,
    curves: &EmpiricalCurves,
    t: f64,
) -> Result<CumulativeOutcome> {
    if !(eta >= 0.0) {
        return Err(Error::InvalidInput(format!("eta must be >= 0, got {eta}")));
    }
    let rhs = eta * StepRate::new(curves.m_dir()).integral(t);
    solve_cumulative(rhs, params)
}

/// Root of K(1 - q(K)/gamma) = rhs on the subcritical branch.
pub fn solve_cumulative(rhs: f64, params: &ModelParams) -> Result<CumulativeOutcome> {
    if rhs == 0.0 {
        return Ok(CumulativeOutcome::Subcritical { k: 0.0 });
    }
    let ec = eta_critical(params);
    if rhs > ec.eta_crit {
        return Ok(CumulativeOutcome::Runaway {
            rhs,
            eta_crit: ec.eta_crit,
        });
    }
    let g = |k: f64| k * (1.0 - q_of_k(k, params) / params.gamma);
    let mut hi = ec.k_crit;
    if !hi.is_finite() {
        hi = rhs.max(1.0);
        while g(hi) < rhs {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Degenerate(
                    "no bracket for the cumulative root".into(),
                ));
            }
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(CumulativeOutcome::Subcritical { k: 0.5 * (lo + hi) })
}

/// Citation lifetime (gamma - q(0))/(gamma - q(K))/m_dir(1); infinite once
/// q(K) reaches gamma.
pub fn lifetime_tau0(k: f64, params: &ModelParams, curves: &EmpiricalCurves) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::InvalidInput(format!("K must be >= 0, got {k}")));
    }
    let m1 = curves.m_dir_at(1)?;
    let qk = q_of_k(k, params);
    if qk >= params.gamma {
        return Ok(f64::INFINITY);
    }
    Ok((params.gamma - q_of_k(0.0, params)) / (params.gamma - qk) / m1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Saturating,
    Runaway,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Saturating => "saturating",
            Regime::Runaway => "runaway",
        })
    }
}

/// Continuum trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumResult {
    pub time: Vec<f64>,
    /// Rate at each grid time (left limit at year boundaries).
    pub k: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub regime: Regime,
    pub eta_crit: f64,
    /// Lifetime at the final K; infinite for runaways.
    pub tau0: f64,
    /// q(K) - gamma at the end, reported for runaways.
    pub growth_exponent: Option<f64>,
}

impl ContinuumResult {
    /// K at an integer year.
    pub fn cumulative_at_year(&self, year: usize) -> Option<f64> {
        let steps = (self.time.len() - 1) as f64 / self.time.last()?;
        self.cumulative
            .get((year as f64 * steps).round() as usize)
            .copied()
    }
}

/// Integrates k = eta·m + q(K)·z, z' = k - gamma·z, K' = k with RK4, where
/// z is the exponentially weighted memory of past citations.
pub fn solve_trajectory(
    eta: f64,
    params: &ModelParams,
    curves: &EmpiricalCurves,
    years: usize,
    steps_per_year: usize,
) -> Result<ContinuumResult> {
    params.validate()?;
    if !(eta >= 0.0) {
        return Err(Error::InvalidInput(format!("eta must be >= 0, got {eta}")));
    }
    if years < 1 || years > curves.len() {
        return Err(Error::OutOfRange(format!(
            "years must be in 1..={}",
            curves.len()
        )));
    }
    let steps_per_year = steps_per_year.max(1);
    let h = 1.0 / steps_per_year as f64;
    let gamma = params.gamma;
    let mut z = 0.0f64;
    let mut big_k = 0.0f64;
    let m = curves.m_dir();
    let mut time = vec![0.0];
    let mut rate = vec![eta * m[0]];
    let mut cumulative = vec![0.0];
    let mut runaway = q_of_k(0.0, params) >= gamma;
    for year in 1..=years {
        let drive = eta * m[year - 1];
        let deriv = |z: f64, kk: f64| {
            let q = q_of_k(kk, params);
            (drive + (q - gamma) * z, drive + q * z)
        };
        for step in 1..=steps_per_year {
            let (a1, b1) = deriv(z, big_k);
            let (a2, b2) = deriv(z + 0.5 * h * a1, big_k + 0.5 * h * b1);
            let (a3, b3) = deriv(z + 0.5 * h * a2, big_k + 0.5 * h * b2);
            let (a4, b4) = deriv(z + h * a3, big_k + h * b3);
            z += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            big_k += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            if !(z.is_finite() && big_k.is_finite()) {
                return Err(Error::Degenerate(format!(
                    "continuum solution overflowed in year {year}"
                )));
            }
            let q = q_of_k(big_k, params);
            runaway |= q >= gamma;
            time.push((year - 1) as f64 + step as f64 * h);
            rate.push(drive + q * z);
            cumulative.push(big_k);
        }
    }
    let regime = if runaway {
        Regime::Runaway
    } else {
        Regime::Saturating
    };
    let tau0 = if runaway {
        f64::INFINITY
    } else {
        lifetime_tau0(big_k, params, curves)?
    };
    Ok(ContinuumResult {
        time,
        k: rate,
        cumulative,
        regime,
        eta_crit: eta_critical(params).eta_crit,
        tau0,
        growth_exponent: runaway.then(|| q_of_k(big_k, params) - gamma),
    })
}
