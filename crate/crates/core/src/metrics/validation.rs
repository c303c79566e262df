//! The metric battery with pass/fail bands.

use serde::Serialize;

use super::binned::{binned_rate_stats, pa_fit, pearson_autocorrelation, PaFitSettings};
use super::stats::spearman;
use super::{mean_rate, uncited_fraction};
use crate::curves::EmpiricalCurves;
use crate::duality::r_to_m;
use crate::error::{Error, Result};
use crate::hawkes::PaperTrajectory;
use crate::params::ModelParams;

/// Acceptance bands for the battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bands {
    pub uncited_year: usize,
    pub uncited: (f64, f64),
    pub delta: (f64, f64),
    pub k0: u64,
    pub fano: (f64, f64),
    /// Fano is checked on bins whose mean next-year count is below this.
    pub fano_mean_below: f64,
    pub min_population: u64,
    pub mean_field_years: (usize, usize),
    pub mean_field_tol: f64,
    pub autocorr_years: Vec<usize>,
}

impl Default for Bands {
    fn default() -> Self {
        Bands {
            uncited_year: 25,
            uncited: (0.055, 0.095),
            delta: (1.1, 1.4),
            k0: 1,
            fano: (0.85, 1.15),
            fano_mean_below: 2.0,
            min_population: 10,
            mean_field_years: (3, 25),
            mean_field_tol: 0.15,
            autocorr_years: vec![15, 20, 25],
        }
    }
}

fn range<T: std::str::FromStr>(v: &str) -> std::result::Result<(T, T), String> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got `{v}`"))?;
    let p = |s: &str| {
        s.trim()
            .parse::<T>()
            .map_err(|_| format!("bad number `{s}`"))
    };
    Ok((p(a)?, p(b)?))
}

impl Bands {
    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let one = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{v}`"))
        };
        let int = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad integer `{v}`"))
        };
        match key {
            "uncited" => self.uncited = range(value)?,
            "uncited_year" => self.uncited_year = int(value)?,
            "delta" => self.delta = range(value)?,
            "k0" => self.k0 = int(value)? as u64,
            "fano" => self.fano = range(value)?,
            "fano_mean_below" => self.fano_mean_below = one(value)?,
            "min_population" => self.min_population = int(value)? as u64,
            "mean_field_years" => self.mean_field_years = range(value)?,
            "mean_field_tol" => self.mean_field_tol = one(value)?,
            "autocorr_years" => {
                self.autocorr_years = value
                    .split(',')
                    .map(int)
                    .collect::<std::result::Result<_, _>>()?
            }
            other => return Err(format!("unknown band `{other}`")),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn within(name: impl Into<String>, value: f64, (lo, hi): (f64, f64), detail: String) -> Self {
        Check {
            name: name.into(),
            value,
            lo,
            hi,
            pass: value >= lo && value <= hi,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

/// Runs the battery: uncited fraction, preferential-attachment fit, Fano
/// numbers, ensemble mean against the duality curve, and the
/// autocorrelation trend.
pub fn validate(
    trajectories: &[PaperTrajectory],
    params: &ModelParams,
    curves: &EmpiricalCurves,
    bands: &Bands,
) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    let horizon = super::common_horizon(trajectories)?;

    let unc = uncited_fraction(trajectories);
    if bands.uncited_year >= 1 && bands.uncited_year <= horizon {
        checks.push(Check::within(
            format!("uncited_fraction_t{}", bands.uncited_year),
            unc[bands.uncited_year - 1],
            bands.uncited,
            format!("{} papers", trajectories.len()),
        ));
    }

    let settings = PaFitSettings {
        min_population: bands.min_population,
        ..PaFitSettings::default()
    };
    let stats = binned_rate_stats(trajectories, &settings.edges)?;
    match pa_fit(&stats, &settings) {
        Ok(fit) => {
            checks.push(Check::within(
                "pa_delta",
                fit.delta,
                bands.delta,
                format!("selected K0={}, {} bins used", fit.k0, fit.bins_used),
            ));
            checks.push(Check::within(
                "pa_k0",
                fit.k0 as f64,
                (bands.k0 as f64, bands.k0 as f64),
                fit.scan
                    .iter()
                    .map(|s| format!("K0={} delta={:.4} ssr={:.4}", s.k0, s.delta, s.ssr))
                    .collect::<Vec<_>>()
                    .join("; "),
            ));
        }
        Err(Error::Degenerate(reason)) => {
            for (name, (lo, hi)) in [
                ("pa_delta", bands.delta),
                ("pa_k0", (bands.k0 as f64, bands.k0 as f64)),
            ] {
                checks.push(Check {
                    name: name.into(),
                    value: f64::NAN,
                    lo,
                    hi,
                    pass: false,
                    detail: reason.clone(),
                });
            }
        }
        Err(e) => return Err(e),
    }

    let fanos: Vec<(f64, &super::RateBin)> = stats
        .bins
        .iter()
        .filter(|b| b.n >= bands.min_population && b.mean_next < bands.fano_mean_below)
        .filter_map(|b| b.fano().map(|f| (f, b)))
        .collect();
    let worst = fanos
        .iter()
        .max_by(|a, b| (a.0 - 1.0).abs().total_cmp(&(b.0 - 1.0).abs()));
    let outside = fanos
        .iter()
        .filter(|(f, _)| *f < bands.fano.0 || *f > bands.fano.1)
        .count();
    match worst {
        Some(&(f, b)) => {
            let mut c = Check::within(
                "fano_low_mean_bins",
                f,
                bands.fano,
                format!(
                    "{outside} of {} bins outside; worst at t={} K={}..{} (n={}, mean={:.3})",
                    fanos.len(),
                    b.t,
                    b.lo,
                    b.hi.map(|h| h.to_string()).unwrap_or_default(),
                    b.n,
                    b.mean_next
                ),
            );
            c.pass = outside == 0;
            checks.push(c);
        }
        None => checks.push(Check {
            name: "fano_low_mean_bins".into(),
            value: f64::NAN,
            lo: bands.fano.0,
            hi: bands.fano.1,
            pass: false,
            detail: "no qualifying bins".into(),
        }),
    }

    let (t_lo, t_hi) = bands.mean_field_years;
    let t_hi = t_hi.min(horizon);
    if t_lo >= 1 && t_lo <= t_hi {
        let dual = r_to_m(
            curves.r(),
            curves.r_dir(),
            curves.r0(),
            params.growth_exponent(),
            t_hi,
        )?;
        let sim = mean_rate(trajectories);
        let (worst_t, dev) = (t_lo..=t_hi)
            .map(|t| (t, (sim[t - 1] / dual.m[t - 1] - 1.0).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty range");
        checks.push(Check::within(
            "mean_field_max_rel_dev",
            dev,
            (0.0, bands.mean_field_tol),
            format!(
                "t={t_lo}..{t_hi}, worst at t={worst_t}: simulated {:.4} vs duality {:.4}",
                sim[worst_t - 1],
                dual.m[worst_t - 1]
            ),
        ));
    }

    for &t in &bands.autocorr_years {
        if t < 2 || t > horizon {
            continue;
        }
        let bins = pearson_autocorrelation(trajectories, t, &settings.edges, bands.min_population)?;
        let (k, c): (Vec<f64>, Vec<f64>) = bins
            .iter()
            .filter(|b| b.lo > 0)
            .filter_map(|b| b.c.map(|c| (b.mean_cum, c)))
            .unzip();
        let rho = if k.len() >= 3 { spearman(&k, &c) } else { None };
        checks.push(Check {
            name: format!("autocorr_trend_t{t}"),
            value: rho.unwrap_or(f64::NAN),
            lo: 0.0,
            hi: 1.0,
            pass: rho.is_some_and(|r| r > 0.0),
            detail: format!("Spearman over {} bins", k.len()),
        });
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { checks, all_pass })
}
