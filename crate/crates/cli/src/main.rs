//! `citedyn` command-line front end.
//!
//! Every subcommand resolves a complete [`config::RunConfig`] first, then
//! writes its artifacts under `--out`. Each artifact embeds that config, and
//! `citedyn rerun <artifact>` rebuilds it from there. Failures print one JSON
//! record on stderr and exit nonzero.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use citedyn::io::Provenance;
use citedyn::metrics::Bands;
use citedyn::ModelParams;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{parse_model, parse_years, Command, RunConfig};

#[derive(Debug, Serialize)]
pub struct Failure {
    kind: String,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    paper_id: Option<u64>,
}

impl Failure {
    pub fn new(kind: &str, message: String) -> Self {
        Failure {
            kind: kind.into(),
            message,
            path: None,
            line: None,
            paper_id: None,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            path: Some(path.display().to_string()),
            ..Failure::new("io", format!("{}: {e}", path.display()))
        }
    }
}

impl From<citedyn::Error> for Failure {
    fn from(e: citedyn::Error) -> Self {
        let mut f = Failure::new(e.kind(), e.to_string());
        match &e {
            citedyn::Error::Parse { path, line, .. } => {
                f.path = Some(path.display().to_string());
                f.line = Some(*line);
            }
            citedyn::Error::Io { path, .. } => f.path = Some(path.display().to_string()),
            citedyn::Error::Trajectory { paper_id, .. } => f.paper_id = Some(*paper_id),
            _ => {}
        }
        f
    }
}

#[derive(Parser)]
#[command(
    name = "citedyn",
    version,
    about = "Citation dynamics simulator and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate an ensemble; writes trajectories.csv, summary.json, uncited.csv.
    Simulate(Common),
    /// Direct/indirect reference profile; writes profile.csv.
    Refmodel {
        #[command(flatten)]
        common: Common,
        /// Multiplies the copying kernel; 0 switches copying off.
        #[arg(long, default_value_t = 1.0)]
        kernel_scale: f64,
    },
    /// Mean citation curve from the reference profile; writes duality.csv.
    Duality(Common),
    /// Lifetime and regime sweeps; writes tau0.csv, regimes.csv, continuum.json.
    Continuum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200.0)]
        eta_max: f64,
        #[arg(long, default_value_t = 40)]
        eta_points: usize,
        #[arg(long, default_value_t = 64)]
        steps_per_year: usize,
    },
    /// Metric battery on a fresh ensemble, or on --input.
    Validate(Battery),
    /// Metric battery on an existing trajectory CSV.
    Replay(Battery),
    /// Re-run the command recorded in an artifact's embedded config.
    Rerun {
        artifact: PathBuf,
        #[arg(long, env = "CITEDYN_OUT", default_value = "out-rerun")]
        out: PathBuf,
        #[arg(long, env = "CITEDYN_WORKERS")]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// key=value parameter file.
    #[arg(long, env = "CITEDYN_PARAMS")]
    params: Option<PathBuf>,
    /// Curves CSV (t,m_dir,F,r_dir,r); built-in curves when absent.
    #[arg(long, env = "CITEDYN_CURVES")]
    curves: Option<PathBuf>,
    #[arg(long, env = "CITEDYN_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, env = "CITEDYN_N", default_value_t = 40195)]
    n: u64,
    /// Years; overrides the params file.
    #[arg(long, env = "CITEDYN_HORIZON")]
    horizon: Option<usize>,
    /// Comma-separated snapshot years; every fifth year when absent.
    #[arg(long, env = "CITEDYN_SNAPSHOTS")]
    snapshots: Option<String>,
    #[arg(long, env = "CITEDYN_OUT", default_value = "out")]
    out: PathBuf,
    /// Worker threads for the ensemble; does not change results.
    #[arg(long, env = "CITEDYN_WORKERS")]
    workers: Option<usize>,
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Latent-rate rule: full or ar2.
    #[arg(long, env = "CITEDYN_MODEL", default_value = "full")]
    model: String,
}

#[derive(Args)]
struct Battery {
    #[command(flatten)]
    common: Common,
    /// Trajectory CSV (paper_id,eta,seed,t,k,K).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Band override such as delta=1.1:1.4, repeatable.
    #[arg(long = "band", value_name = "KEY=VALUE")]
    band: Vec<String>,
    /// Exit with status 3 when any check fails.
    #[arg(long)]
    strict: bool,
}

fn split_kv(s: &str) -> Result<(&str, &str), Failure> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Failure::new("usage", format!("expected KEY=VALUE, got `{s}`")))
}

fn resolve(command: Command, c: Common) -> Result<RunConfig, Failure> {
    let mut params = match &c.params {
        Some(p) => ModelParams::load(p)?,
        None => ModelParams::default(),
    };
    for s in &c.set {
        let (k, v) = split_kv(s)?;
        match params.set(k, v) {
            Ok(true) => {}
            Ok(false) => return Err(Failure::new("usage", format!("--set: unknown key `{k}`"))),
            Err(e) => return Err(Failure::new("usage", format!("--set {k}: {e}"))),
        }
    }
    if let Some(h) = c.horizon {
        params.horizon = h;
    }
    params.validate()?;
    let snapshots = match &c.snapshots {
        Some(s) => {
            parse_years(s).map_err(|e| Failure::new("usage", format!("--snapshots: {e}")))?
        }
        None => (5..=params.horizon).step_by(5).collect(),
    };
    Ok(RunConfig {
        command,
        params,
        curves_path: c.curves,
        seed: c.seed,
        n_papers: c.n,
        snapshots,
        model: parse_model(&c.model).map_err(|e| Failure::new("usage", e))?,
        bands: Bands::default(),
        input: None,
        kernel_scale: 1.0,
        eta_max: 200.0,
        eta_points: 40,
        steps_per_year: 64,
        out: c.out,
        workers: c.workers,
    })
}

fn battery(command: Command, b: Battery) -> Result<(RunConfig, bool), Failure> {
    let mut cfg = resolve(command, b.common)?;
    cfg.input = b.input;
    for s in &b.band {
        let (k, v) = split_kv(s)?;
        cfg.bands
            .set(k, v)
            .map_err(|e| Failure::new("usage", format!("--band: {e}")))?;
    }
    Ok((cfg, b.strict))
}

fn read_artifact(path: &Path) -> Result<Provenance, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text).map_err(citedyn::Error::from)?;
        let obj = v.get("config").and_then(|c| c.as_object()).ok_or_else(|| {
            Failure::new(
                "provenance",
                format!("{}: no config object", path.display()),
            )
        })?;
        let mut p = Provenance::default();
        for (k, v) in obj {
            p.push(k.clone(), v.as_str().unwrap_or_default());
        }
        Ok(p)
    } else {
        Provenance::read_comments(text.as_bytes()).map_err(|e| Failure::io(path, e))
    }
}

fn dispatch(cli: Cli) -> Result<(RunConfig, bool), Failure> {
    Ok(match cli.cmd {
        Cmd::Simulate(c) => (resolve(Command::Simulate, c)?, false),
        Cmd::Refmodel {
            common,
            kernel_scale,
        } => {
            let mut cfg = resolve(Command::Refmodel, common)?;
            cfg.kernel_scale = kernel_scale;
            (cfg, false)
        }
        Cmd::Duality(c) => (resolve(Command::Duality, c)?, false),
        Cmd::Continuum {
            common,
            eta_max,
            eta_points,
            steps_per_year,
        } => {
            let mut cfg = resolve(Command::Continuum, common)?;
            cfg.eta_max = eta_max;
            cfg.eta_points = eta_points;
            cfg.steps_per_year = steps_per_year;
            (cfg, false)
        }
        Cmd::Validate(b) => battery(Command::Validate, b)?,
        Cmd::Replay(b) => battery(Command::Replay, b)?,
        Cmd::Rerun {
            artifact,
            out,
            workers,
        } => {
            let prov = read_artifact(&artifact)?;
            let mut cfg = RunConfig::from_provenance(&prov, out, &artifact)?;
            cfg.workers = workers;
            (cfg, false)
        }
    })
}

fn fail(f: Failure, code: u8) -> ExitCode {
    let record = serde_json::json!({ "error": f });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ")
                .to_string();
            return fail(Failure::new("usage", first), 2);
        }
    };
    let result = dispatch(cli).and_then(|(cfg, strict)| commands::run(&cfg, strict));
    match result {
        Ok(out) => {
            for l in &out.lines {
                println!("{l}");
            }
            if out.checks_failed {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => fail(f, 1),
    }
}
