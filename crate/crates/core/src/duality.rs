//! Reference-age (synchronous) to citation-rate (diachronous) conversion.

use serde::Serialize;

use crate::curves::TAIL_OFFSET;
use crate::error::{Error, Result};

/// Mean annual citations by years after publication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCitationCurve {
    pub m: Vec<f64>,
    pub m_dir: Vec<f64>,
    pub growth_exponent: f64,
}

/// M(t) = r(t)·R0·exp((alpha+beta)·t), and the same for the direct part.
pub fn r_to_m(
    r: &[f64],
    r_dir: &[f64],
    r0: f64,
    growth_exponent: f64,
    horizon: usize,
) -> Result<MeanCitationCurve> {
    let sum: f64 = r.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "reference profile sums to {sum}, expected 1"
        )));
    }
    if !(r0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "R0 must be positive, got {r0}"
        )));
    }
    if r.len() < horizon || r_dir.len() < horizon {
        return Err(Error::InvalidInput(format!(
            "profiles shorter than horizon {horizon}"
        )));
    }
    let scale = |t: usize| r0 * (growth_exponent * t as f64).exp();
    Ok(MeanCitationCurve {
        m: (1..=horizon).map(|t| r[t - 1] * scale(t)).collect(),
        m_dir: (1..=horizon).map(|t| r_dir[t - 1] * scale(t)).collect(),
        growth_exponent,
    })
}

fn check_horizon(m_dir: &[f64], horizon: usize) -> Result<()> {
    if horizon < 1 {
        return Err(Error::InvalidInput("horizon must be >= 1".into()));
    }
    if m_dir.len() < horizon {
        return Err(Error::InvalidInput(format!(
            "M_dir has {} entries, horizon is {horizon}",
            m_dir.len()
        )));
    }
    if let Some(i) = m_dir.iter().take(horizon).position(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput(format!("M_dir({}) is negative", i + 1)));
    }
    Ok(())
}

/// Linear mean-field recursion M(t) = M_dir(t) + sum_{tau<t} G(t-tau)·M(tau),
/// where G(lag) is the copying probability times the second-generation
/// factor at that lag.
pub fn mean_field_m(m_dir: &[f64], kernel: &[f64], horizon: usize) -> Result<Vec<f64>> {
    check_horizon(m_dir, horizon)?;
    if kernel.len() + 1 < horizon {
        return Err(Error::InvalidInput(
            "kernel shorter than horizon - 1".into(),
        ));
    }
    let mut m: Vec<f64> = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let copied: f64 = (1..t).map(|tau| kernel[t - tau - 1] * m[tau - 1]).sum();
        m.push(m_dir[t - 1] + copied);
    }
    Ok(m)
}

/// Stationary mean-field recursion where the second-generation factor is
/// the mean citation curve itself:
/// M(t) = M_dir(t) + sum_{tau<t} M(t-tau)·Pbar(t-tau)·M(tau).
pub fn mean_field_m_self_consistent(
    m_dir: &[f64],
    pbar: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    check_horizon(m_dir, horizon)?;
    if pbar.len() + 1 < horizon {
        return Err(Error::InvalidInput("Pbar shorter than horizon - 1".into()));
    }
    let mut m: Vec<f64> = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let copied: f64 = (1..t)
            .map(|tau| m[t - tau - 1] * pbar[t - tau - 1] * m[tau - 1])
            .sum();
        m.push(m_dir[t - 1] + copied);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport {
    pub reference_converges: bool,
    pub citation_converges: bool,
    /// sum_{t<=horizon} r(t)
    pub reference_partial: f64,
    /// sum_{t<=horizon} r(t)·exp(growth·t)
    pub citation_partial: f64,
}

/// Analytic convergence verdicts for sum r(t) and sum r(t)e^{growth·t}
/// under a tail r(t) ~ (t - 0.8)^-tail_exponent, with partial sums up to
/// `horizon`. Past the tabulated profile r is continued by the tail law
/// matched to the last entry.
pub fn tail_convergence_report(
    r: &[f64],
    growth_exponent: f64,
    tail_exponent: f64,
    horizon: usize,
) -> Result<TailReport> {
    if r.is_empty() {
        return Err(Error::InvalidInput("empty profile".into()));
    }
    let n = r.len();
    let law = |t: usize| (t as f64 - TAIL_OFFSET).powf(-tail_exponent);
    let amp = r[n - 1] / law(n);
    let at = |t: usize| if t <= n { r[t - 1] } else { amp * law(t) };
    let mut reference_partial = 0.0;
    let mut citation_partial = 0.0;
    for t in 1..=horizon {
        let v = at(t);
        reference_partial += v;
        citation_partial += v * (growth_exponent * t as f64).exp();
    }
    let reference_converges = tail_exponent > 1.0;
    let citation_converges =
        growth_exponent < 0.0 || (growth_exponent == 0.0 && reference_converges);
    Ok(TailReport {
        reference_converges,
        citation_converges,
        reference_partial,
        citation_partial,
    })
}
