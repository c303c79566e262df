//! Calibration constants and the flat `key=value` format used to store them.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the lag profile F is scaled inside the self-exciting kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelNorm {
    /// Kernel is P0(K)·F(dt) with F taken verbatim from the table.
    Table,
    /// F is rescaled so the summed kernel weight equals q(K)/gamma, the
    /// branching ratio of the continuum model.
    Branching,
}

impl fmt::Display for KernelNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelNorm::Table => "table",
            KernelNorm::Branching => "branching",
        })
    }
}

impl FromStr for KernelNorm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "table" => Ok(KernelNorm::Table),
            "branching" => Ok(KernelNorm::Branching),
            other => Err(format!(
                "unknown kernel_norm `{other}` (expected table|branching)"
            )),
        }
    }
}

/// Scalar calibration constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Obsolescence rate, 1/yr.
    pub gamma: f64,
    /// Reference-list growth rate, 1/yr.
    pub beta: f64,
    /// Publication growth rate, 1/yr.
    pub alpha: f64,
    pub p0_base: f64,
    /// Slope of P0 per decade of K.
    pub p0_slope: f64,
    /// Continuum copying rate is q = q_prefactor·P0(K).
    pub q_prefactor: f64,
    pub fitness_mu: f64,
    pub fitness_sigma: f64,
    /// Mean multiplicity of second-generation paths.
    pub s_bar: f64,
    /// Years.
    pub horizon: usize,
    pub kernel_norm: KernelNorm,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            gamma: 1.2,
            beta: 0.02,
            alpha: 0.026,
            p0_base: 0.34,
            p0_slope: 0.82,
            q_prefactor: 1.09,
            fitness_mu: 1.62,
            fitness_sigma: 1.1,
            s_bar: 1.2,
            horizon: 30,
            kernel_norm: KernelNorm::Branching,
        }
    }
}

pub const PARAM_KEYS: [&str; 11] = [
    "gamma",
    "beta",
    "alpha",
    "p0_base",
    "p0_slope",
    "q_prefactor",
    "fitness_mu",
    "fitness_sigma",
    "s_bar",
    "horizon",
    "kernel_norm",
];

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("alpha", self.alpha),
            ("p0_base", self.p0_base),
            ("p0_slope", self.p0_slope),
            ("q_prefactor", self.q_prefactor),
            ("fitness_mu", self.fitness_mu),
            ("fitness_sigma", self.fitness_sigma),
            ("s_bar", self.s_bar),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if self.gamma <= 0.0 {
            return Err(Error::param("gamma", "must be > 0"));
        }
        if self.gamma <= self.beta {
            return Err(Error::param("beta", "gamma must exceed beta"));
        }
        if self.p0_base < 0.0 {
            return Err(Error::param("p0_base", "must be >= 0"));
        }
        if self.p0_slope < 0.0 {
            return Err(Error::param("p0_slope", "must be >= 0"));
        }
        if self.q_prefactor < 0.0 {
            return Err(Error::param("q_prefactor", "must be >= 0"));
        }
        if self.fitness_sigma < 0.0 {
            return Err(Error::param("fitness_sigma", "must be >= 0"));
        }
        if self.horizon < 1 {
            return Err(Error::param("horizon", "must be >= 1"));
        }
        Ok(())
    }

    /// Growth exponent alpha + beta of the duality relation.
    pub fn growth_exponent(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Decay rate of the second-generation multiplier F beyond its table.
    pub fn f_decay(&self) -> f64 {
        self.gamma - self.beta
    }

    /// Sets one field from its textual value. Returns `Ok(false)` for keys
    /// that are not ModelParams fields.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<bool, String> {
        fn num(v: &str) -> std::result::Result<f64, String> {
            v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"))
        }
        match key {
            "gamma" => self.gamma = num(value)?,
            "beta" => self.beta = num(value)?,
            "alpha" => self.alpha = num(value)?,
            "p0_base" => self.p0_base = num(value)?,
            "p0_slope" => self.p0_slope = num(value)?,
            "q_prefactor" => self.q_prefactor = num(value)?,
            "fitness_mu" => self.fitness_mu = num(value)?,
            "fitness_sigma" => self.fitness_sigma = num(value)?,
            "s_bar" => self.s_bar = num(value)?,
            "horizon" => {
                self.horizon = value
                    .parse::<usize>()
                    .map_err(|e| format!("`{value}`: {e}"))?
            }
            "kernel_norm" => self.kernel_norm = value.parse()?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Every field as `(key, value)` in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("gamma", self.gamma.to_string()),
            ("beta", self.beta.to_string()),
            ("alpha", self.alpha.to_string()),
            ("p0_base", self.p0_base.to_string()),
            ("p0_slope", self.p0_slope.to_string()),
            ("q_prefactor", self.q_prefactor.to_string()),
            ("fitness_mu", self.fitness_mu.to_string()),
            ("fitness_sigma", self.fitness_sigma.to_string()),
            ("s_bar", self.s_bar.to_string()),
            ("horizon", self.horizon.to_string()),
            ("kernel_norm", self.kernel_norm.to_string()),
        ]
    }

    /// Parses a params file. Keys that are not fields are an error.
    pub fn from_kv_str(text: &str, path: &Path) -> Result<Self> {
        let mut p = ModelParams::default();
        for entry in parse_kv(text, path)? {
            match p.set(&entry.key, &entry.value) {
                Ok(true) => {}
                Ok(false) => return Err(entry.error(path, format!("unknown key `{}`", entry.key))),
                Err(reason) => return Err(entry.error(path, reason)),
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_kv_str(&text, path)
    }

    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_pairs() {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

/// One `key=value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct KvEntry {
    pub line: u64,
    pub key: String,
    pub value: String,
}

impl KvEntry {
    pub fn error(&self, path: &Path, reason: impl Into<String>) -> Error {
        Error::Parse {
            path: path.to_path_buf(),
            line: self.line,
            reason: reason.into(),
        }
    }
}

/// Splits flat `key=value` text. Blank lines and `#` comments are skipped;
/// repeated keys are rejected.
pub fn parse_kv(text: &str, path: &Path) -> Result<Vec<KvEntry>> {
    let mut out: Vec<KvEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = (i + 1) as u64;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((k, v)) = trimmed.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("expected key=value, got `{trimmed}`"),
            });
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: "empty key".into(),
            });
        }
        if out.iter().any(|e| e.key == key) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("duplicate key `{key}`"),
            });
        }
        out.push(KvEntry {
            line,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}
