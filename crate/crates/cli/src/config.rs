//! Fully resolved run configuration and its provenance form.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use citedyn::hawkes::{Ar2Coefficients, RateModel};
use citedyn::io::Provenance;
use citedyn::metrics::Bands;
use citedyn::{EmpiricalCurves, ModelParams};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Refmodel,
    Duality,
    Continuum,
    Validate,
    Replay,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Simulate => "simulate",
            Command::Refmodel => "refmodel",
            Command::Duality => "duality",
            Command::Continuum => "continuum",
            Command::Validate => "validate",
            Command::Replay => "replay",
        })
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "refmodel" => Command::Refmodel,
            "duality" => Command::Duality,
            "continuum" => Command::Continuum,
            "validate" => Command::Validate,
            "replay" => Command::Replay,
            other => return Err(format!("unknown command `{other}`")),
        })
    }
}

pub fn model_name(m: RateModel) -> &'static str {
    match m {
        RateModel::Full => "full",
        RateModel::Ar2(_) => "ar2",
    }
}

pub fn parse_model(s: &str) -> Result<RateModel, String> {
    match s {
        "full" => Ok(RateModel::Full),
        "ar2" => Ok(RateModel::Ar2(Ar2Coefficients::default())),
        other => Err(format!("unknown rate model `{other}` (full, ar2)")),
    }
}

pub fn parse_years(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|y| {
            y.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad year `{y}`"))
        })
        .collect()
}

fn join_years(ys: &[usize]) -> String {
    ys.iter()
        .map(|y| y.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Everything a subcommand needs, with all defaults filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    /// `None` means the built-in curves.
    pub curves_path: Option<PathBuf>,
    pub seed: u64,
    pub n_papers: u64,
    pub snapshots: Vec<usize>,
    pub model: RateModel,
    pub bands: Bands,
    pub input: Option<PathBuf>,
    pub kernel_scale: f64,
    pub eta_max: f64,
    pub eta_points: usize,
    pub steps_per_year: usize,
    pub out: PathBuf,
    /// Not recorded: output does not depend on it.
    pub workers: Option<usize>,
}

fn band_pairs(b: &Bands) -> Vec<(&'static str, String)> {
    let r = |(lo, hi): (f64, f64)| format!("{lo}:{hi}");
    vec![
        ("uncited", r(b.uncited)),
        ("uncited_year", b.uncited_year.to_string()),
        ("delta", r(b.delta)),
        ("k0", b.k0.to_string()),
        ("fano", r(b.fano)),
        ("fano_mean_below", b.fano_mean_below.to_string()),
        ("min_population", b.min_population.to_string()),
        (
            "mean_field_years",
            format!("{}:{}", b.mean_field_years.0, b.mean_field_years.1),
        ),
        ("mean_field_tol", b.mean_field_tol.to_string()),
        ("autocorr_years", join_years(&b.autocorr_years)),
    ]
}

impl RunConfig {
    pub fn curves(&self) -> Result<EmpiricalCurves, Failure> {
        match &self.curves_path {
            Some(p) => Ok(EmpiricalCurves::load(p)?),
            None => Ok(EmpiricalCurves::default()),
        }
    }

    pub fn provenance(&self) -> Provenance {
        let mut p = Provenance::default();
        p.push("command", self.command);
        p.push("tool_version", env!("CARGO_PKG_VERSION"));
        p.push("seed", self.seed);
        p.push("n_papers", self.n_papers);
        p.push("snapshots", join_years(&self.snapshots));
        p.push("model", model_name(self.model));
        p.push(
            "curves",
            self.curves_path
                .as_ref()
                .map(|c| c.display().to_string())
                .unwrap_or_else(|| "default".into()),
        );
        p.push(
            "input",
            self.input
                .as_ref()
                .map(|c| c.display().to_string())
                .unwrap_or_default(),
        );
        p.push("kernel_scale", self.kernel_scale);
        p.push("eta_max", self.eta_max);
        p.push("eta_points", self.eta_points);
        p.push("steps_per_year", self.steps_per_year);
        for (k, v) in self.params.to_pairs() {
            p.push(k, v);
        }
        for (k, v) in band_pairs(&self.bands) {
            p.push(format!("band.{k}"), v);
        }
        p
    }

    /// Rebuilds a configuration from an artifact's embedded provenance.
    pub fn from_provenance(
        prov: &Provenance,
        out: PathBuf,
        source: &Path,
    ) -> Result<Self, Failure> {
        let bad = |key: &str, reason: String| {
            Failure::new(
                "provenance",
                format!("{}: key `{key}`: {reason}", source.display()),
            )
        };
        let get = |key: &str| prov.get(key).ok_or_else(|| bad(key, "missing".into()));
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse::<T>().map_err(|_| format!("cannot parse `{v}`"))
        }
        let mut params = ModelParams::default();
        for key in citedyn::params::PARAM_KEYS {
            let v = get(key)?;
            params.set(key, v).map_err(|e| bad(key, e))?;
        }
        let mut bands = Bands::default();
        for (key, _) in band_pairs(&Bands::default()) {
            let full = format!("band.{key}");
            bands.set(key, get(&full)?).map_err(|e| bad(&full, e))?;
        }
        let path_or_none = |v: &str, none: &str| (v != none).then(|| PathBuf::from(v));
        let cfg = RunConfig {
            command: get("command")?.parse().map_err(|e| bad("command", e))?,
            params,
            curves_path: path_or_none(get("curves")?, "default"),
            seed: num(get("seed")?).map_err(|e| bad("seed", e))?,
            n_papers: num(get("n_papers")?).map_err(|e| bad("n_papers", e))?,
            snapshots: parse_years(get("snapshots")?).map_err(|e| bad("snapshots", e))?,
            model: parse_model(get("model")?).map_err(|e| bad("model", e))?,
            bands,
            input: path_or_none(get("input")?, ""),
            kernel_scale: num(get("kernel_scale")?).map_err(|e| bad("kernel_scale", e))?,
            eta_max: num(get("eta_max")?).map_err(|e| bad("eta_max", e))?,
            eta_points: num(get("eta_points")?).map_err(|e| bad("eta_points", e))?,
            steps_per_year: num(get("steps_per_year")?).map_err(|e| bad("steps_per_year", e))?,
            out,
            workers: None,
        };
        cfg.params.validate()?;
        Ok(cfg)
    }
}
