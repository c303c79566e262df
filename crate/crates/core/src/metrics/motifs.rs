//! Multiplet statistics, clustering and the multiplicity-based P0 check.

use serde::Serialize;

use super::stats::{mean_var, ols};
use crate::error::{Error, Result};

/// Second-generation multiplet statistics: fraction f_j of citing papers
/// reached by j paths and their indirect-citation probability pi_j
/// (index 0 holds j = 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotifStats {
    f: Vec<f64>,
    pi: Vec<f64>,
    n2: f64,
}

impl MotifStats {
    pub fn new(f: Vec<f64>, pi: Vec<f64>, n2: f64) -> Result<Self> {
        if f.is_empty() || f.len() != pi.len() {
            return Err(Error::InvalidInput(
                "f and pi must be non-empty and equally long".into(),
            ));
        }
        if f.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput("f_j must be >= 0".into()));
        }
        let total: f64 = f.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "multiplet fractions sum to {total}, expected 1"
            )));
        }
        if pi.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidInput("pi_j must lie in [0, 1]".into()));
        }
        if !(n2 >= 0.0) {
            return Err(Error::InvalidInput(format!("N2 must be >= 0, got {n2}")));
        }
        Ok(MotifStats { f, pi, n2 })
    }

    /// Like `new` but rescales f to unit sum first, for rounded tables.
    pub fn normalized(f: Vec<f64>, pi: Vec<f64>, n2: f64) -> Result<Self> {
        let total: f64 = f.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("multiplet fractions sum to zero".into()));
        }
        Self::new(f.into_iter().map(|v| v / total).collect(), pi, n2)
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn n2(&self) -> f64 {
        self.n2
    }

    /// Mean multiplicity s = sum_j j·f_j.
    pub fn s(&self) -> f64 {
        self.f
            .iter()
            .enumerate()
            .map(|(i, f)| (i + 1) as f64 * f)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusteringEstimate {
    /// 2·N2·sum_j j·pi_j·f_j/(K-1)
    pub full: f64,
    /// 2·N2·pi_1·(1 + 7(s-1))/(K-1), assuming pi_2 = 4·pi_1 and no triplets.
    pub doublet: f64,
}

pub fn clustering_from_motifs(m: &MotifStats, k: u64) -> Result<ClusteringEstimate> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "clustering needs K >= 2, got {k}"
        )));
    }
    let denom = (k - 1) as f64;
    let weighted: f64 =
        m.f.iter()
            .zip(&m.pi)
            .enumerate()
            .map(|(i, (f, p))| (i + 1) as f64 * p * f)
            .sum();
    Ok(ClusteringEstimate {
        full: 2.0 * m.n2 * weighted / denom,
        doublet: 2.0 * m.n2 * m.pi[0] * (1.0 + 7.0 * (m.s() - 1.0)) / denom,
    })
}

/// Slope of s per decade of K in the default logarithmic multiplicity
/// trend (s = 1 at K = 1, s = 1.7 at K = 1000).
pub const MULTIPLICITY_SLOPE: f64 = 0.7 / 3.0;

/// s(K) = 1 + slope·log10 K, K clamped at 1.
pub fn multiplicity_trend(k: f64, slope: f64) -> f64 {
    1.0 + slope * k.max(1.0).log10()
}

/// Log-log slope of C_K over `ks` when the multiplet mix follows the
/// trend s(K): doublets only, f_2 = s - 1 and pi_2 = 4·pi_1.
pub fn clustering_slope(pi1: f64, n2: f64, ks: &[u64], slope: f64) -> Result<f64> {
    let mut x = Vec::with_capacity(ks.len());
    let mut y = Vec::with_capacity(ks.len());
    for &k in ks {
        let s = multiplicity_trend(k as f64, slope);
        if s > 2.0 {
            return Err(Error::InvalidInput(format!(
                "s(K={k}) = {s} needs triplets"
            )));
        }
        let m = MotifStats::new(vec![2.0 - s, s - 1.0], vec![pi1, 4.0 * pi1], n2)?;
        let c = clustering_from_motifs(&m, k)?.full;
        x.push((k as f64).ln());
        y.push(c.ln());
    }
    ols(&x, &y)
        .map(|(b, _)| b)
        .ok_or_else(|| Error::Degenerate("need at least two distinct K".into()))
}

/// Saturation toy model: s = x/(1 - e^-x) with x = mK/S; s(0) = 1.
pub fn toy_s_of_k(m: f64, k: f64, field_size: f64) -> Result<f64> {
    if !(field_size > 0.0) || !(m > 0.0) || !(0.0..=field_size).contains(&k) {
        return Err(Error::InvalidInput(format!(
            "toy model needs S > 0, m > 0 and 0 <= K <= S (m={m}, K={k}, S={field_size})"
        )));
    }
    let x = m * k / field_size;
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(x / -(-x).exp_m1())
}

/// Best single-scale overlap of P0(K) with c·(1 + 3(s(K) - 1)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P0Overlap {
    pub scale: f64,
    /// Root-mean-square of P0 - c·(1 + 3(s - 1)).
    pub residual: f64,
    /// Standard deviation of the P0 series, for scale.
    pub p0_spread: f64,
}

pub fn p0_consistency_check(s_by_k: &[f64], p0_by_k: &[f64]) -> Result<P0Overlap> {
    if s_by_k.len() != p0_by_k.len() || s_by_k.len() < 2 {
        return Err(Error::InvalidInput(
            "series must share a K grid of at least two points".into(),
        ));
    }
    let x: Vec<f64> = s_by_k.iter().map(|s| 1.0 + 3.0 * (s - 1.0)).collect();
    let (_, vx) = mean_var(&x);
    let (_, vp) = mean_var(p0_by_k);
    if vx == 0.0 || vp == 0.0 {
        return Err(Error::Degenerate(
            "constant series cannot confirm an overlap".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(p0_by_k).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let scale = sxy / sxx;
    let n = x.len() as f64;
    let residual = (x
        .iter()
        .zip(p0_by_k)
        .map(|(a, b)| (b - scale * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(P0Overlap {
        scale,
        residual,
        p0_spread: vp.sqrt(),
    })
}
