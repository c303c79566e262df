//! Subcommand bodies. Each one writes its artifacts under `cfg.out` and
//! returns a few human-readable lines for stdout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use citedyn::continuum::{eta_critical, lifetime_tau0, solve_trajectory};
use citedyn::duality::{r_to_m, tail_convergence_report};
use citedyn::hawkes::{simulate_ensemble_with, EnsembleConfig, EnsembleSummary, PaperTrajectory};
use citedyn::io::{self, Provenance};
use citedyn::metrics::{
    binned_rate_stats, citation_distribution, pa_fit, pearson_autocorrelation, uncited_fraction,
    validate, PaFitSettings,
};
use citedyn::reference::{compute_indirect_reduced, exponential_kernel};
use citedyn::{EmpiricalCurves, ModelParams};
use serde_json::json;

use crate::config::{Command, RunConfig};
use crate::Failure;

pub struct Outcome {
    pub lines: Vec<String>,
    /// Set when `--strict` validation found failing checks.
    pub checks_failed: bool,
}

fn write_file(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<String, Failure> {
    let path = dir.join(name);
    let wrap = |e: std::io::Error| Failure::io(&path, e);
    let mut w = BufWriter::new(File::create(&path).map_err(wrap)?);
    f(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)?;
    Ok(path.display().to_string())
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<String, Failure> {
    write_file(dir, name, |w| w.write_all(text.as_bytes()))
}

fn horizon(params: &ModelParams, curves: &EmpiricalCurves) -> usize {
    params.horizon.min(curves.len())
}

pub fn run(cfg: &RunConfig, strict: bool) -> Result<Outcome, Failure> {
    cfg.params.validate()?;
    let curves = cfg.curves()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Failure::io(&cfg.out, e))?;
    let prov = cfg.provenance();
    let mut out = Outcome {
        lines: Vec::new(),
        checks_failed: false,
    };
    match cfg.command {
        Command::Simulate => simulate(cfg, &curves, &prov, &mut out)?,
        Command::Refmodel => refmodel(cfg, &curves, &prov, &mut out)?,
        Command::Duality => duality(cfg, &curves, &prov, &mut out)?,
        Command::Continuum => continuum(cfg, &curves, &prov, &mut out)?,
        Command::Validate | Command::Replay => battery(cfg, &curves, &prov, strict, &mut out)?,
    }
    Ok(out)
}

fn ensemble(
    cfg: &RunConfig,
    curves: &EmpiricalCurves,
) -> Result<(EnsembleSummary, Vec<PaperTrajectory>), Failure> {
    let mut ec = EnsembleConfig::new(cfg.n_papers, cfg.seed, cfg.snapshots.clone());
    ec.workers = cfg.workers;
    ec.model = cfg.model;
    let e = simulate_ensemble_with(&ec, &cfg.params, curves)?;
    Ok((e.summary, e.trajectories))
}

fn simulate(
    cfg: &RunConfig,
    curves: &EmpiricalCurves,
    prov: &Provenance,
    out: &mut Outcome,
) -> Result<(), Failure> {
    let (summary, trajs) = ensemble(cfg, curves)?;
    let unc = summary.uncited_fraction();
    out.lines
        .push(write_file(&cfg.out, "trajectories.csv", |w| {
            io::write_trajectories(w, &trajs, prov)
        })?);
    out.lines.push(write_text(
        &cfg.out,
        "summary.json",
        &io::summary_json(&summary, prov)?,
    )?);
    out.lines.push(write_file(&cfg.out, "uncited.csv", |w| {
        io::write_uncited(w, &unc, prov)
    })?);
    out.lines.push(format!(
        "{} papers, {} years; uncited at final year {:.4}",
        summary.n_papers,
        summary.horizon,
        unc.last().copied().unwrap_or(f64::NAN)
    ));
    Ok(())
}

fn refmodel(
    cfg: &RunConfig,
    curves: &EmpiricalCurves,
    prov: &Provenance,
    out: &mut Outcome,
) -> Result<(), Failure> {
    let h = horizon(&cfg.params, curves);
    let kernel: Vec<f64> = exponential_kernel(curves.r0(), cfg.params.p0_base, cfg.params.gamma, h)
        .into_iter()
        .map(|v| v * cfg.kernel_scale)
        .collect();
    let profile = compute_indirect_reduced(&curves.r_dir()[..h], &kernel, h)?;
    let share = profile.indirect_share();
    out.lines.push(write_file(&cfg.out, "profile.csv", |w| {
        io::write_profile(w, &profile, prov)
    })?);
    let body = json!({ "horizon": h, "indirect_share": share, "kernel": profile.kernel });
    out.lines.push(write_text(
        &cfg.out,
        "refmodel.json",
        &io::json_with_config("refmodel", &body, prov)?,
    )?);
    out.lines
        .push(format!("indirect share over {h} years: {share:.4}"));
    Ok(())
}

fn duality(
    cfg: &RunConfig,
    curves: &EmpiricalCurves,
    prov: &Provenance,
    out: &mut Outcome,
) -> Result<(), Failure> {
    let h = horizon(&cfg.params, curves);
    let growth = cfg.params.growth_exponent();
    let m = r_to_m(curves.r(), curves.r_dir(), curves.r0(), growth, h)?;
    let tail = tail_convergence_report(curves.r(), growth, citedyn::curves::TAIL_EXPONENT, h)?;
    out.lines.push(write_file(&cfg.out, "duality.csv", |w| {
        io::write_duality(w, &m, prov)
    })?);
    let body = json!({ "growth_exponent": growth, "tail": tail });
    out.lines.push(write_text(
        &cfg.out,
        "duality.json",
        &io::json_with_config("duality", &body, prov)?,
    )?);
    out.lines.push(format!(
        "sum of M over {h} years: {:.4}",
        m.m.iter().sum::<f64>()
    ));
    Ok(())
}

fn continuum(
    cfg: &RunConfig,
    curves: &EmpiricalCurves,
    prov: &Provenance,
    out: &mut Outcome,
) -> Result<(), Failure> {
    let crit = eta_critical(&cfg.params);
    let tau: Vec<(f64, f64)> = (0..=40)
        .map(|i| {
            let k = 10f64.powf(i as f64 / 10.0);
            lifetime_tau0(k, &cfg.params, curves).map(|t| (k, t))
        })
        .collect::<citedyn::Result<_>>()?;
    let h = horizon(&cfg.params, curves);
    let points = cfg.eta_points.max(1);
    let mut regimes = Vec::with_capacity(points);
    for i in 1..=points {
        let eta = cfg.eta_max * i as f64 / points as f64;
        let r = solve_trajectory(eta, &cfg.params, curves, h, cfg.steps_per_year)?;
        regimes.push((
            eta,
            *r.cumulative.last().expect("grid is non-empty"),
            r.regime,
        ));
    }
    out.lines.push(write_file(&cfg.out, "tau0.csv", |w| {
        io::write_tau0(w, &tau, prov)
    })?);
    out.lines.push(write_file(&cfg.out, "regimes.csv", |w| {
        io::write_regimes(w, &regimes, prov)
    })?);
    out.lines.push(write_text(
        &cfg.out,
        "continuum.json",
        &io::json_with_config("critical", &crit, prov)?,
    )?);
    out.lines.push(format!(
        "eta_crit {:.4} at K {:.1}; q(K) reaches gamma at K {:.1}",
        crit.eta_crit, crit.k_crit, crit.k_divergence
    ));
    Ok(())
}

fn battery(
    cfg: &RunConfig,
    curves: &EmpiricalCurves,
    prov: &Provenance,
    strict: bool,
    out: &mut Outcome,
) -> Result<(), Failure> {
    let trajs = match &cfg.input {
        Some(p) => io::ingest_trajectories(p)?.trajectories,
        None if cfg.command == Command::Replay => {
            return Err(Failure::new(
                "usage",
                "replay needs --input <trajectories.csv>".into(),
            ))
        }
        None => ensemble(cfg, curves)?.1,
    };
    let report = validate(&trajs, &cfg.params, curves, &cfg.bands)?;
    let settings = PaFitSettings {
        min_population: cfg.bands.min_population,
        ..PaFitSettings::default()
    };
    let stats = binned_rate_stats(&trajs, &settings.edges)?;
    let fit = match pa_fit(&stats, &settings) {
        Ok(f) => Some(f),
        Err(citedyn::Error::Degenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let last = trajs.iter().map(|t| t.horizon()).min().unwrap_or(0);
    let auto = cfg
        .bands
        .autocorr_years
        .iter()
        .filter(|&&t| t >= 2 && t <= last)
        .map(|&t| {
            pearson_autocorrelation(&trajs, t, &settings.edges, cfg.bands.min_population)
                .map(|b| (t, b))
        })
        .collect::<citedyn::Result<Vec<_>>>()?;
    let dist = citation_distribution(&trajs, last)?;
    let unc = uncited_fraction(&trajs);

    out.lines.push(write_text(
        &cfg.out,
        "report.json",
        &io::json_with_config("report", &report, prov)?,
    )?);
    out.lines.push(write_file(&cfg.out, "binned.csv", |w| {
        io::write_binned(w, &stats, prov)
    })?);
    if let Some(fit) = &fit {
        out.lines.push(write_file(&cfg.out, "pa_scan.csv", |w| {
            io::write_pa_scan(w, fit, prov)
        })?);
    }
    out.lines.push(write_file(&cfg.out, "autocorr.csv", |w| {
        io::write_autocorr(w, &auto, prov)
    })?);
    out.lines.push(write_file(&cfg.out, "uncited.csv", |w| {
        io::write_uncited(w, &unc, prov)
    })?);
    out.lines
        .push(write_file(&cfg.out, "distribution.csv", |w| {
            io::write_distribution(w, last, &dist, prov)
        })?);
    for c in &report.checks {
        out.lines.push(format!(
            "{} {} = {:.4} in [{}, {}]  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.lo,
            c.hi,
            c.detail
        ));
    }
    out.checks_failed = strict && !report.all_pass;
    Ok(())
}
