//! Age composition of reference lists: direct references plus references
//! copied from the lists of earlier papers.

use serde::Serialize;

use crate::error::{Error, Result};

/// Age profile split into direct and copied references, all indexed from
/// age 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceProfile {
    pub r_dir: Vec<f64>,
    pub r_indir: Vec<f64>,
    pub r_total: Vec<f64>,
    /// Copying kernel T(tau).
    pub kernel: Vec<f64>,
}

impl ReferenceProfile {
    /// Share of copied references, sum(r_indir) / sum(r_total).
    pub fn indirect_share(&self) -> f64 {
        let indir: f64 = self.r_indir.iter().sum();
        let total: f64 = self.r_total.iter().sum();
        indir / total
    }
}

/// T(tau) = r0·p0·exp(-gamma·(tau-1)) for tau = 1..=n.
pub fn exponential_kernel(r0: f64, p0: f64, gamma: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|tau| r0 * p0 * (-gamma * (tau - 1) as f64).exp())
        .collect()
}

fn check_profile(name: &str, v: &[f64], horizon: usize) -> Result<()> {
    if v.len() < horizon {
        return Err(Error::InvalidInput(format!(
            "{name} has {} entries, horizon is {horizon}",
            v.len()
        )));
    }
    if let Some(i) = v
        .iter()
        .take(horizon)
        .position(|x| !(x.is_finite() && *x >= 0.0))
    {
        return Err(Error::InvalidInput(format!(
            "{name}({}) = {} is negative or not finite",
            i + 1,
            v[i]
        )));
    }
    Ok(())
}

// sum_{tau=1}^{t-1} r(t-tau)·T(tau)·r(tau), 1-based t over 0-based slices
#[inline]
fn copied(r: &[f64], kernel: &[f64], t: usize) -> f64 {
    (1..t)
        .map(|tau| r[t - tau - 1] * kernel[tau - 1] * r[tau - 1])
        .sum()
}

/// Solves r(t) = r_dir(t) + sum_{tau<t} r(t-tau)·T(tau)·r(tau) forward in t.
pub fn compute_indirect_reduced(
    r_dir: &[f64],
    kernel: &[f64],
    horizon: usize,
) -> Result<ReferenceProfile> {
    if horizon < 1 {
        return Err(Error::InvalidInput("horizon must be >= 1".into()));
    }
    check_profile("r_dir", r_dir, horizon)?;
    check_profile("T", kernel, horizon)?;
    let mut r_total = Vec::with_capacity(horizon);
    let mut r_indir = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let indir = copied(&r_total, kernel, t);
        r_indir.push(indir);
        r_total.push(r_dir[t - 1] + indir);
    }
    Ok(ReferenceProfile {
        r_dir: r_dir[..horizon].to_vec(),
        r_indir,
        r_total,
        kernel: kernel[..horizon].to_vec(),
    })
}

/// Inverse of the forward recursion: the direct profile that reproduces a
/// given total profile under kernel T.
pub fn invert_direct(r: &[f64], kernel: &[f64]) -> Result<Vec<f64>> {
    let n = r.len();
    check_profile("r", r, n)?;
    check_profile("T", kernel, n)?;
    (1..=n)
        .map(|t| {
            let d = r[t - 1] - copied(r, kernel, t);
            if d < 0.0 {
                Err(Error::InvalidInput(format!(
                    "copied references exceed r({t}); no nonnegative direct profile exists"
                )))
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// Largest difference between the two convolution orderings of the copied
/// term, sum r(t-tau)T(tau)r(tau) and sum r(t-tau)T(t-tau)r(tau).
pub fn convolution_form_check(r: &[f64], kernel: &[f64], horizon: usize) -> Result<f64> {
    check_profile("r", r, horizon)?;
    check_profile("T", kernel, horizon)?;
    let mut worst = 0.0f64;
    for t in 1..=horizon {
        let a: f64 = (1..t)
            .map(|tau| r[t - tau - 1] * kernel[tau - 1] * r[tau - 1])
            .sum();
        let b: f64 = (1..t)
            .map(|tau| r[t - tau - 1] * kernel[t - tau - 1] * r[tau - 1])
            .sum();
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Reference counts R(citing_year, cited_year) over a square block of years.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMatrix {
    first_year: i64,
    years: usize,
    values: Vec<f64>,
}

impl ReferenceMatrix {
    pub fn from_fn(first_year: i64, years: usize, f: impl Fn(i64, i64) -> f64) -> Self {
        let mut values = Vec::with_capacity(years * years);
        for i in 0..years as i64 {
            for j in 0..years as i64 {
                values.push(f(first_year + i, first_year + j));
            }
        }
        ReferenceMatrix {
            first_year,
            years,
            values,
        }
    }

    pub fn constant(first_year: i64, years: usize, value: f64) -> Self {
        Self::from_fn(first_year, years, |_, _| value)
    }

    /// Stationary matrix from an age profile: R(x, y) = profile(x - y),
    /// zero for same-year and future references.
    pub fn from_age_profile(first_year: i64, years: usize, profile: &[f64]) -> Self {
        Self::from_fn(first_year, years, |x, y| {
            let age = x - y;
            if age >= 1 {
                profile.get(age as usize - 1).copied().unwrap_or(0.0)
            } else {
                0.0
            }
        })
    }

    pub fn get(&self, citing: i64, cited: i64) -> Result<f64> {
        let last = self.first_year + self.years as i64 - 1;
        let inside = |y: i64| y >= self.first_year && y <= last;
        if !inside(citing) || !inside(cited) {
            return Err(Error::OutOfRange(format!(
                "R({citing}, {cited}) outside tabulated years {}..={last}",
                self.first_year
            )));
        }
        let i = (citing - self.first_year) as usize;
        let j = (cited - self.first_year) as usize;
        Ok(self.values[i * self.years + j])
    }
}

/// Copied references of age t in the list of a paper published in t0:
/// sum_{tau=1}^{t} R(t0-tau, t0-t)·Pbar(tau)·R(t0, t0-tau).
pub fn compute_indirect_absolute(
    refs: &ReferenceMatrix,
    pbar: &[f64],
    t0: i64,
    t: usize,
) -> Result<f64> {
    if pbar.len() < t {
        return Err(Error::OutOfRange(format!(
            "Pbar has {} entries, need {t}",
            pbar.len()
        )));
    }
    let mut sum = 0.0;
    for tau in 1..=t {
        let tau_i = tau as i64;
        sum += refs.get(t0 - tau_i, t0 - t as i64)? * pbar[tau - 1] * refs.get(t0, t0 - tau_i)?;
    }
    Ok(sum)
}

/// Fitted copying kernel Pbar(tau) = p0·exp(-gamma·(tau-1)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelFit {
    pub p0: f64,
    pub gamma: f64,
    /// Euclidean norm of observed minus predicted.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    /// Leave age 1 out of the least-squares sum.
    pub skip_first_year: bool,
}

fn kernel_basis(total: &[f64], gamma: f64, t: usize) -> f64 {
    (1..t)
        .map(|tau| total[t - tau - 1] * (-gamma * (tau - 1) as f64).exp() * total[tau - 1])
        .sum()
}

/// Unweighted least-squares fit of the exponential copying kernel so that
/// the stationary copied-reference sum built from `r_total` matches
/// `r_indir_observed`.
pub fn fit_exponential_kernel(
    r_indir_observed: &[f64],
    r_total: &[f64],
    opts: FitOptions,
) -> Result<KernelFit> {
    let n = r_indir_observed.len();
    if n < 5 || r_total.len() != n {
        return Err(Error::InvalidInput(format!(
            "profiles must share a length >= 5 (got {} and {})",
            n,
            r_total.len()
        )));
    }
    check_profile("R_indir", r_indir_observed, n)?;
    check_profile("R_total", r_total, n)?;
    if r_indir_observed.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate(
            "observed indirect profile is identically zero".into(),
        ));
    }
    let start = if opts.skip_first_year { 2 } else { 1 };
    // profile out p0 for fixed gamma
    let profile = |gamma: f64| -> (f64, f64) {
        let (mut og, mut gg, mut oo) = (0.0, 0.0, 0.0);
        for t in start..=n {
            let g = kernel_basis(r_total, gamma, t);
            let o = r_indir_observed[t - 1];
            og += o * g;
            gg += g * g;
            oo += o * o;
        }
        if gg == 0.0 {
            return (0.0, oo);
        }
        let p0 = og / gg;
        (p0, (oo - p0 * og).max(0.0))
    };
    let (lo_g, hi_g) = (1e-3f64, 20.0f64);
    let grid = 400;
    let at = |i: usize| lo_g * (hi_g / lo_g).powf(i as f64 / grid as f64);
    let best = (0..=grid)
        .min_by(|&a, &b| profile(at(a)).1.total_cmp(&profile(at(b)).1))
        .unwrap();
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(grid)));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..200 {
        if profile(c).1 < profile(d).1 {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
        if (b - a).abs() < 1e-13 * b {
            break;
        }
    }
    let gamma = 0.5 * (a + b);
    let (p0, _) = profile(gamma);
    let residual = (start..=n)
        .map(|t| {
            let e = r_indir_observed[t - 1] - p0 * kernel_basis(r_total, gamma, t);
            e * e
        })
        .sum::<f64>()
        .sqrt();
    Ok(KernelFit {
        p0,
        gamma,
        residual,
    })
}
