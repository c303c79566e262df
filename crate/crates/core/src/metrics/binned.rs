//! K-binned next-year statistics: Fano numbers, the preferential-attachment
//! fit and year-to-year autocorrelation.

use std::collections::BTreeMap;

use serde::Serialize;

use super::common_horizon;
use super::stats::CountMoments;
use crate::error::{Error, Result};
use crate::hawkes::PaperTrajectory;

/// Lower edges of contiguous K bins; the last bin is open-ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinEdges {
    lowers: Vec<u64>,
}

impl Default for BinEdges {
    /// {0}, 1-2, 3-5, 6-10, 11-20, 21-50, 51-100, ...
    fn default() -> Self {
        let mut lowers = vec![0, 1];
        let mut decade = 1u64;
        'outer: loop {
            for mult in [2u64, 5, 10] {
                let Some(upper) = decade.checked_mul(mult) else {
                    break 'outer;
                };
                lowers.push(upper + 1);
            }
            match decade.checked_mul(10) {
                Some(d) if d < 1_000_000_000_000 => decade = d,
                _ => break,
            }
        }
        BinEdges { lowers }
    }
}

impl BinEdges {
    /// Edges must start at 0 and increase strictly.
    pub fn new(lowers: Vec<u64>) -> Result<Self> {
        if lowers.first() != Some(&0) {
            return Err(Error::InvalidInput("bin edges must start at 0".into()));
        }
        if lowers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "bin edges must increase strictly".into(),
            ));
        }
        Ok(BinEdges { lowers })
    }

    pub fn lowers(&self) -> &[u64] {
        &self.lowers
    }

    /// Index of the bin holding k.
    pub fn index(&self, k: u64) -> usize {
        self.lowers.partition_point(|&lo| lo <= k) - 1
    }

    /// Inclusive bounds of bin i; `None` upper for the last bin.
    pub fn bounds(&self, i: usize) -> (u64, Option<u64>) {
        (self.lowers[i], self.lowers.get(i + 1).map(|u| u - 1))
    }
}

/// Papers with K(t) in one bin and their counts in year t+1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBin {
    pub t: usize,
    pub lo: u64,
    pub hi: Option<u64>,
    pub n: u64,
    pub mean_cum: f64,
    pub mean_next: f64,
    pub var_next: f64,
}

impl RateBin {
    /// Variance-to-mean ratio; `None` when the mean is zero.
    pub fn fano(&self) -> Option<f64> {
        (self.mean_next > 0.0).then(|| self.var_next / self.mean_next)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedRateStats {
    pub bins: Vec<RateBin>,
}

/// Groups papers by K(t) for every t < horizon and summarizes k(t+1).
pub fn binned_rate_stats(
    trajectories: &[PaperTrajectory],
    edges: &BinEdges,
) -> Result<BinnedRateStats> {
    let horizon = common_horizon(trajectories)?;
    if horizon < 2 {
        return Err(Error::InvalidInput(
            "binning needs at least 2 years of history".into(),
        ));
    }
    let mut bins = Vec::new();
    for t in 1..horizon {
        let mut groups: BTreeMap<usize, CountMoments> = BTreeMap::new();
        for tr in trajectories {
            let cum = tr.cum_at(t);
            groups
                .entry(edges.index(cum))
                .or_default()
                .push(cum, tr.k_at(t + 1));
        }
        for (i, m) in groups {
            let (lo, hi) = edges.bounds(i);
            bins.push(RateBin {
                t,
                lo,
                hi,
                n: m.n,
                mean_cum: m.mean_x(),
                mean_next: m.mean_y(),
                var_next: m.var_y(),
            });
        }
    }
    Ok(BinnedRateStats { bins })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaFitSettings {
    pub edges: BinEdges,
    pub min_population: u64,
    pub k0_grid: Vec<u64>,
}

impl Default for PaFitSettings {
    fn default() -> Self {
        PaFitSettings {
            edges: BinEdges::default(),
            min_population: 10,
            k0_grid: (0..=5).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedBin {
    pub t: usize,
    pub lo: u64,
    pub hi: Option<u64>,
    pub n: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K0Score {
    pub k0: u64,
    pub delta: f64,
    /// Residual sum of squares in log space.
    pub ssr: f64,
}

/// Mean next-year citations ~ A(t)·(K + K0)^delta.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaFit {
    pub delta: f64,
    pub k0: u64,
    /// log A(t) at the selected K0.
    pub intercepts: Vec<(usize, f64)>,
    pub scan: Vec<K0Score>,
    pub bins_used: usize,
    pub excluded: Vec<ExcludedBin>,
}

/// Log-space least squares with a free intercept per year and one shared
/// exponent, repeated for every K0 on the grid; the K0 with the smallest
/// residual wins. The K = 0 bin never enters the fit.
pub fn pa_fit(stats: &BinnedRateStats, settings: &PaFitSettings) -> Result<PaFit> {
    let mut used: Vec<&RateBin> = Vec::new();
    let mut excluded = Vec::new();
    for b in &stats.bins {
        let reason = if b.lo == 0 {
            Some("K=0 bin is outside the power-law fit".to_string())
        } else if b.n < settings.min_population {
            Some(format!(
                "population {} below {}",
                b.n, settings.min_population
            ))
        } else if b.mean_next <= 0.0 {
            Some("zero mean next-year citations".to_string())
        } else {
            None
        };
        match reason {
            Some(reason) => excluded.push(ExcludedBin {
                t: b.t,
                lo: b.lo,
                hi: b.hi,
                n: b.n,
                reason,
            }),
            None => used.push(b),
        }
    }
    if settings.k0_grid.is_empty() {
        return Err(Error::InvalidInput("empty K0 grid".into()));
    }
    let fit_at = |k0: u64| -> Option<(f64, f64, Vec<(usize, f64)>)> {
        let mut by_t: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for b in &used {
            by_t.entry(b.t)
                .or_default()
                .push(((b.mean_cum + k0 as f64).ln(), b.mean_next.ln()));
        }
        let (mut sxy, mut sxx) = (0.0, 0.0);
        let mut centers = Vec::new();
        for (&t, pts) in &by_t {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            for (x, y) in pts {
                sxy += (x - mx) * (y - my);
                sxx += (x - mx) * (x - mx);
            }
            centers.push((t, mx, my));
        }
        if sxx == 0.0 {
            return None;
        }
        let delta = sxy / sxx;
        let intercepts: Vec<(usize, f64)> = centers
            .iter()
            .map(|&(t, mx, my)| (t, my - delta * mx))
            .collect();
        let a: BTreeMap<usize, f64> = intercepts.iter().copied().collect();
        let ssr = by_t
            .iter()
            .flat_map(|(t, pts)| pts.iter().map(move |p| (t, p)))
            .map(|(t, (x, y))| {
                let e = y - a[t] - delta * x;
                e * e
            })
            .sum();
        Some((delta, ssr, intercepts))
    };
    let mut scan = Vec::new();
    let mut best: Option<(u64, f64, f64, Vec<(usize, f64)>)> = None;
    for &k0 in &settings.k0_grid {
        let Some((delta, ssr, intercepts)) = fit_at(k0) else {
            return Err(Error::Degenerate(
                "every usable year has a single K bin; the exponent is not identified".into(),
            ));
        };
        scan.push(K0Score { k0, delta, ssr });
        if best.as_ref().is_none_or(|b| ssr < b.2) {
            best = Some((k0, delta, ssr, intercepts));
        }
    }
    let (k0, delta, _, intercepts) = best.expect("grid is non-empty");
    Ok(PaFit {
        delta,
        k0,
        intercepts,
        scan,
        bins_used: used.len(),
        excluded,
    })
}

/// Binned next-year statistics and the preferential-attachment fit.
pub fn fano_and_pa_fit(
    trajectories: &[PaperTrajectory],
    settings: &PaFitSettings,
) -> Result<(BinnedRateStats, PaFit)> {
    let stats = binned_rate_stats(trajectories, &settings.edges)?;
    let fit = pa_fit(&stats, settings)?;
    Ok((stats, fit))
}

/// Correlation of k(t) and k(t-1) among papers sharing a K(t) bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrBin {
    pub lo: u64,
    pub hi: Option<u64>,
    pub n: u64,
    pub mean_cum: f64,
    /// `None` when the bin is too small or has zero variance.
    pub c: Option<f64>,
    pub note: Option<String>,
}

pub fn pearson_autocorrelation(
    trajectories: &[PaperTrajectory],
    t: usize,
    edges: &BinEdges,
    min_population: u64,
) -> Result<Vec<AutocorrBin>> {
    let horizon = common_horizon(trajectories)?;
    if t < 2 || t > horizon {
        return Err(Error::OutOfRange(format!(
            "autocorrelation year {t} outside 2..={horizon}"
        )));
    }
    let mut groups: BTreeMap<usize, (u128, CountMoments)> = BTreeMap::new();
    for tr in trajectories {
        let cum = tr.cum_at(t);
        let g = groups.entry(edges.index(cum)).or_default();
        g.0 += cum as u128;
        g.1.push(tr.k_at(t), tr.k_at(t - 1));
    }
    Ok(groups
        .into_iter()
        .map(|(i, (cum, m))| {
            let (lo, hi) = edges.bounds(i);
            let n = m.n;
            let (c, note) = if n < min_population {
                (None, Some(format!("population {n} below {min_population}")))
            } else {
                match m.pearson() {
                    Some(c) => (Some(c), None),
                    None => (None, Some("zero variance".to_string())),
                }
            };
            AutocorrBin {
                lo,
                hi,
                n,
                mean_cum: cum as f64 / n as f64,
                c,
                note,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_edges() {
        let e = BinEdges::default();
        assert_eq!(&e.lowers()[..9], &[0, 1, 3, 6, 11, 21, 51, 101, 201]);
        assert_eq!(e.index(0), 0);
        assert_eq!(e.index(2), 1);
        assert_eq!(e.index(3), 2);
        assert_eq!(e.index(10), 3);
        assert_eq!(e.index(u64::MAX), e.lowers().len() - 1);
        assert_eq!(e.bounds(2), (3, Some(5)));
    }

    #[test]
    fn edges_validated() {
        assert!(BinEdges::new(vec![1, 2]).is_err());
        assert!(BinEdges::new(vec![0, 2, 2]).is_err());
        assert!(BinEdges::new(vec![0, 5]).is_ok());
    }

    #[test]
    fn populations_sum_to_ensemble() {
        let trajs: Vec<_> = (0..40)
            .map(|i| PaperTrajectory::from_counts(i, None, None, vec![i % 3, i % 5, i % 7, 1]))
            .collect();
        let s = binned_rate_stats(&trajs, &BinEdges::default()).unwrap();
        for t in 1..4 {
            let n: u64 = s.bins.iter().filter(|b| b.t == t).map(|b| b.n).sum();
            assert_eq!(n, 40);
        }
    }
}
