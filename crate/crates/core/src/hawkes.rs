//! Stochastic citation trajectories: yearly Poisson draws with a
//! self-exciting latent rate.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::EmpiricalCurves;
use crate::error::{Error, Result};
use crate::model::{sample_fitness, Kernel};
use crate::params::ModelParams;
use crate::rng;

/// One paper's citation history. Years are 1-based in accessors; the
/// vectors hold year t at index t-1.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperTrajectory {
    pub id: u64,
    /// Unknown for measured data.
    pub eta: Option<f64>,
    /// Seed of the paper's generator; unknown for measured data.
    pub seed: Option<u64>,
    pub k: Vec<u64>,
    pub cumulative: Vec<u64>,
}

impl PaperTrajectory {
    pub fn from_counts(id: u64, eta: Option<f64>, seed: Option<u64>, k: Vec<u64>) -> Self {
        let cumulative = k
            .iter()
            .scan(0u64, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        PaperTrajectory {
            id,
            eta,
            seed,
            k,
            cumulative,
        }
    }

    pub fn horizon(&self) -> usize {
        self.k.len()
    }

    /// k(t); zero for t outside 1..=horizon.
    pub fn k_at(&self, t: usize) -> u64 {
        if t == 0 {
            0
        } else {
            self.k.get(t - 1).copied().unwrap_or(0)
        }
    }

    /// K(t); K(0) = 0.
    pub fn cum_at(&self, t: usize) -> u64 {
        if t == 0 {
            0
        } else {
            self.cumulative[t - 1]
        }
    }
}

fn check_year(t: usize, params: &ModelParams, curves: &EmpiricalCurves) -> Result<()> {
    let last = params.horizon.min(curves.len());
    if t < 1 || t > last {
        return Err(Error::OutOfRange(format!("year {t} outside 1..={last}")));
    }
    Ok(())
}

fn check_history(history: &[u64], t: usize) -> Result<()> {
    if history.len() + 1 < t {
        return Err(Error::InvalidInput(format!(
            "history covers {} years, year {t} needs {}",
            history.len(),
            t - 1
        )));
    }
    Ok(())
}

#[inline]
fn full_rate(eta: f64, m_t: f64, history: &[u64], cum_prev: u64, kernel: &Kernel) -> f64 {
    let t = history.len() + 1;
    let mut excited = 0.0;
    for tau in 1..t {
        let k = history[tau - 1];
        if k != 0 {
            excited += kernel.lag_weight(t - tau) * k as f64;
        }
    }
    eta * m_t + kernel.p0(cum_prev) * excited
}

/// Latent rate in year t given counts k(1..t-1) in `history` (extra
/// entries are ignored): eta·m_dir(t) + sum_{tau<t} P0(K(t-1))·F(t-tau)·k(tau).
pub fn latent_rate(
    eta: f64,
    history: &[u64],
    t: usize,
    params: &ModelParams,
    curves: &EmpiricalCurves,
) -> Result<f64> {
    check_year(t, params, curves)?;
    check_history(history, t)?;
    let past = &history[..t - 1];
    let kernel = Kernel::new(params, curves, t.max(2) - 1)?;
    let cum_prev = past.iter().sum();
    Ok(full_rate(eta, curves.m_dir_at(t)?, past, cum_prev, &kernel))
}

/// Coefficients of the two-lag autoregressive reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ar2Coefficients {
    pub lag1: f64,
    pub lag2: f64,
}

impl Default for Ar2Coefficients {
    fn default() -> Self {
        Ar2Coefficients {
            lag1: 0.09,
            lag2: 0.19,
        }
    }
}

#[inline]
fn ar2_inner(
    eta: f64,
    m_t: f64,
    history: &[u64],
    cum_prev: u64,
    slope: f64,
    c: Ar2Coefficients,
) -> f64 {
    let t = history.len() + 1;
    let k1 = if t >= 2 { history[t - 2] } else { 0 } as f64;
    let k2 = if t >= 3 { history[t - 3] } else { 0 } as f64;
    let gain = 1.0 + slope * (cum_prev.max(1) as f64).log10();
    eta * m_t + gain * (c.lag1 * k1 + c.lag2 * k2)
}

/// eta·m_dir(t) + [1 + slope·log10 K(t-1)]·[c1·k(t-1) + c2·k(t-2)].
pub fn ar2_rate(
    eta: f64,
    history: &[u64],
    t: usize,
    params: &ModelParams,
    curves: &EmpiricalCurves,
    coeffs: Ar2Coefficients,
) -> Result<f64> {
    check_year(t, params, curves)?;
    check_history(history, t)?;
    let past = &history[..t - 1];
    Ok(ar2_inner(
        eta,
        curves.m_dir_at(t)?,
        past,
        past.iter().sum(),
        params.p0_slope,
        coeffs,
    ))
}

/// One Poisson draw.
pub fn poisson_step<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidInput(format!(
            "Poisson rate must be finite and >= 0, got {rate}"
        )));
    }
    if rate == 0.0 {
        return Ok(0);
    }
    let d =
        Poisson::new(rate).map_err(|e| Error::InvalidInput(format!("Poisson rate {rate}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

/// Which latent-rate rule drives the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub enum RateModel {
    #[default]
    Full,
    Ar2(Ar2Coefficients),
}

struct Simulator<'a> {
    params: &'a ModelParams,
    curves: &'a EmpiricalCurves,
    kernel: Kernel,
    model: RateModel,
    horizon: usize,
}

impl<'a> Simulator<'a> {
    fn new(params: &'a ModelParams, curves: &'a EmpiricalCurves, model: RateModel) -> Result<Self> {
        params.validate()?;
        let horizon = params.horizon;
        if horizon > curves.len() {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} exceeds the {} tabulated years of m_dir",
                curves.len()
            )));
        }
        Ok(Simulator {
            params,
            curves,
            kernel: Kernel::new(params, curves, horizon)?,
            model,
            horizon,
        })
    }

    fn run(&self, id: u64, eta: f64, seed: u64) -> Result<PaperTrajectory> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "fitness must be finite and >= 0, got {eta}"
            )));
        }
        let mut rng = rng::trajectory_rng(seed);
        let mut k = Vec::with_capacity(self.horizon);
        let mut cum = 0u64;
        let m = self.curves.m_dir();
        for t in 1..=self.horizon {
            let rate = match self.model {
                RateModel::Full => full_rate(eta, m[t - 1], &k, cum, &self.kernel),
                RateModel::Ar2(c) => ar2_inner(eta, m[t - 1], &k, cum, self.params.p0_slope, c),
            };
            let draw = poisson_step(rate, &mut rng).map_err(|e| Error::Trajectory {
                paper_id: id,
                reason: format!("year {t}: {e}"),
            })?;
            k.push(draw);
            cum += draw;
        }
        Ok(PaperTrajectory::from_counts(id, Some(eta), Some(seed), k))
    }
}

/// Simulates one paper for `params.horizon` years.
pub fn simulate_paper(
    eta: f64,
    params: &ModelParams,
    curves: &EmpiricalCurves,
    seed: u64,
) -> Result<PaperTrajectory> {
    simulate_paper_with(eta, params, curves, seed, RateModel::Full)
}

pub fn simulate_paper_with(
    eta: f64,
    params: &ModelParams,
    curves: &EmpiricalCurves,
    seed: u64,
    model: RateModel,
) -> Result<PaperTrajectory> {
    Simulator::new(params, curves, model)?.run(0, eta, seed)
}

/// Per-snapshot histograms and per-year aggregates of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n_papers: u64,
    pub horizon: usize,
    pub snapshots: Vec<Snapshot>,
    /// Papers with K(t) = 0, per year.
    pub uncited: Vec<u64>,
    /// Sum of k(t) over papers, per year.
    pub citations: Vec<u64>,
}

/// Histogram of K at one year: K -> number of papers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub year: usize,
    pub histogram: BTreeMap<u64, u64>,
}

impl EnsembleSummary {
    pub fn empty(horizon: usize, snapshot_years: &[usize]) -> Result<Self> {
        if let Some(y) = snapshot_years.iter().find(|&&y| y < 1 || y > horizon) {
            return Err(Error::InvalidInput(format!(
                "snapshot year {y} outside 1..={horizon}"
            )));
        }
        Ok(EnsembleSummary {
            n_papers: 0,
            horizon,
            snapshots: snapshot_years
                .iter()
                .map(|&year| Snapshot {
                    year,
                    histogram: BTreeMap::new(),
                })
                .collect(),
            uncited: vec![0; horizon],
            citations: vec![0; horizon],
        })
    }

    pub fn add(&mut self, traj: &PaperTrajectory) -> Result<()> {
        if traj.horizon() != self.horizon {
            return Err(Error::Trajectory {
                paper_id: traj.id,
                reason: format!(
                    "covers {} years, summary expects {}",
                    traj.horizon(),
                    self.horizon
                ),
            });
        }
        self.n_papers += 1;
        for t in 0..self.horizon {
            if traj.cumulative[t] == 0 {
                self.uncited[t] += 1;
            }
            self.citations[t] += traj.k[t];
        }
        for s in &mut self.snapshots {
            *s.histogram.entry(traj.cum_at(s.year)).or_insert(0) += 1;
        }
        Ok(())
    }

    /// Combines two summaries over disjoint paper sets. Commutative.
    pub fn merge(mut self, other: &EnsembleSummary) -> Result<Self> {
        let years = |s: &EnsembleSummary| s.snapshots.iter().map(|x| x.year).collect::<Vec<_>>();
        if self.horizon != other.horizon || years(&self) != years(other) {
            return Err(Error::InvalidInput(
                "summaries have different layouts".into(),
            ));
        }
        self.n_papers += other.n_papers;
        for t in 0..self.horizon {
            self.uncited[t] += other.uncited[t];
            self.citations[t] += other.citations[t];
        }
        for (a, b) in self.snapshots.iter_mut().zip(&other.snapshots) {
            for (&k, &n) in &b.histogram {
                *a.histogram.entry(k).or_insert(0) += n;
            }
        }
        Ok(self)
    }

    pub fn uncited_fraction(&self) -> Vec<f64> {
        self.uncited
            .iter()
            .map(|&u| u as f64 / self.n_papers as f64)
            .collect()
    }

    /// Mean k(t) over the ensemble.
    pub fn mean_rate(&self) -> Vec<f64> {
        self.citations
            .iter()
            .map(|&c| c as f64 / self.n_papers as f64)
            .collect()
    }
}

/// Ensemble run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_papers: u64,
    pub master_seed: u64,
    pub snapshot_years: Vec<usize>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub model: RateModel,
}

impl EnsembleConfig {
    pub fn new(n_papers: u64, master_seed: u64, snapshot_years: Vec<usize>) -> Self {
        EnsembleConfig {
            n_papers,
            master_seed,
            snapshot_years,
            workers: None,
            model: RateModel::Full,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub summary: EnsembleSummary,
    /// Ordered by paper id.
    pub trajectories: Vec<PaperTrajectory>,
}

/// Draws a fitness per paper and simulates every paper on its own
/// generator. Output does not depend on the worker count.
pub fn simulate_ensemble(
    n_papers: u64,
    params: &ModelParams,
    curves: &EmpiricalCurves,
    master_seed: u64,
    snapshot_years: &[usize],
) -> Result<Ensemble> {
    simulate_ensemble_with(
        &EnsembleConfig::new(n_papers, master_seed, snapshot_years.to_vec()),
        params,
        curves,
    )
}

pub fn simulate_ensemble_with(
    cfg: &EnsembleConfig,
    params: &ModelParams,
    curves: &EmpiricalCurves,
) -> Result<Ensemble> {
    if cfg.n_papers < 1 {
        return Err(Error::InvalidInput(
            "ensemble needs at least one paper".into(),
        ));
    }
    let sim = Simulator::new(params, curves, cfg.model)?;
    let mut summary = EnsembleSummary::empty(sim.horizon, &cfg.snapshot_years)?;
    let one = |i: u64| -> Result<PaperTrajectory> {
        let seed = rng::paper_seed(cfg.master_seed, i);
        let eta = sample_fitness(
            &mut rng::fitness_rng(seed),
            params.fitness_mu,
            params.fitness_sigma,
        )?
        .eta;
        sim.run(i, eta, seed)
    };
    let run_all = || {
        (0..cfg.n_papers)
            .into_par_iter()
            .map(one)
            .collect::<Result<Vec<_>>>()
    };
    let trajectories = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(run_all)?,
        None => run_all()?,
    };
    for t in &trajectories {
        summary.add(t)?;
    }
    Ok(Ensemble {
        summary,
        trajectories,
    })
}
