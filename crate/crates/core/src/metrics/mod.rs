//! Diagnostics computed on simulated or measured trajectories.

mod binned;
mod motifs;
pub mod stats;
mod validation;

pub use binned::{
    binned_rate_stats, fano_and_pa_fit, pa_fit, pearson_autocorrelation, AutocorrBin, BinEdges,
    BinnedRateStats, ExcludedBin, K0Score, PaFit, PaFitSettings, RateBin,
};
pub use motifs::{
    clustering_from_motifs, clustering_slope, multiplicity_trend, p0_consistency_check, toy_s_of_k,
    ClusteringEstimate, MotifStats, P0Overlap, MULTIPLICITY_SLOPE,
};
pub use validation::{validate, Bands, Check, ValidationReport};

use crate::error::{Error, Result};
use crate::hawkes::PaperTrajectory;

/// Number of papers with K(year) >= k, for k = 0..=max K.
pub fn citation_distribution(trajectories: &[PaperTrajectory], year: usize) -> Result<Vec<u64>> {
    if year < 1 {
        return Err(Error::OutOfRange("snapshot year must be >= 1".into()));
    }
    let mut counts: Vec<u64> = Vec::new();
    for t in trajectories {
        if year > t.horizon() {
            return Err(Error::Trajectory {
                paper_id: t.id,
                reason: format!("snapshot year {year} beyond its {} years", t.horizon()),
            });
        }
        let k = t.cum_at(year) as usize;
        if counts.len() <= k {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
    }
    // exact counts -> survival counts
    let mut acc = 0;
    for c in counts.iter_mut().rev() {
        acc += *c;
        *c = acc;
    }
    if counts.is_empty() {
        counts.push(0);
    }
    Ok(counts)
}

/// Fraction of papers with K(t) = 0, for t = 1..=shortest horizon.
pub fn uncited_fraction(trajectories: &[PaperTrajectory]) -> Vec<f64> {
    let Some(h) = trajectories.iter().map(|t| t.horizon()).min() else {
        return Vec::new();
    };
    let n = trajectories.len() as f64;
    (1..=h)
        .map(|year| trajectories.iter().filter(|t| t.cum_at(year) == 0).count() as f64 / n)
        .collect()
}

/// Mean k(t) across papers, for t = 1..=shortest horizon.
pub fn mean_rate(trajectories: &[PaperTrajectory]) -> Vec<f64> {
    let Some(h) = trajectories.iter().map(|t| t.horizon()).min() else {
        return Vec::new();
    };
    let n = trajectories.len() as f64;
    (1..=h)
        .map(|year| {
            trajectories
                .iter()
                .map(|t| t.k_at(year) as f64)
                .sum::<f64>()
                / n
        })
        .collect()
}

pub(crate) fn common_horizon(trajectories: &[PaperTrajectory]) -> Result<usize> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InvalidInput("no trajectories".into()))?
        .horizon();
    if let Some(t) = trajectories.iter().find(|t| t.horizon() != first) {
        return Err(Error::Trajectory {
            paper_id: t.id,
            reason: format!("covers {} years, others cover {first}", t.horizon()),
        });
    }
    Ok(first)
}
