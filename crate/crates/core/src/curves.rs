//! Tabulated yearly curves and their CSV form.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::reference;

/// F(t) for t = 1..5, Physics 1984.
pub const F_TABLE: [f64; 5] = [0.089, 0.138, 0.046, 0.012, 0.0035];
pub const DEFAULT_R0: f64 = 20.5;
pub const DEFAULT_YEARS: usize = 30;

/// First-year direct rate of the default m_dir.
pub const M_DIR_FIRST: f64 = 0.23;
/// Offset and exponent of the power-law tails.
pub const TAIL_OFFSET: f64 = 0.8;
pub const TAIL_EXPONENT: f64 = 1.5;
/// Default r(t): fixed first-year value, then A·(t - 0.8 + R_SHIFT)^-1.5.
pub const R_FIRST: f64 = 0.055;
pub const R_SHIFT: f64 = 5.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCurves {
    m_dir: Vec<f64>,
    f: Vec<f64>,
    r_dir: Vec<f64>,
    r: Vec<f64>,
    r0: f64,
}

impl Default for EmpiricalCurves {
    fn default() -> Self {
        let params = ModelParams::default();
        let m_dir = default_m_dir(DEFAULT_YEARS, params.growth_exponent());
        let r = default_r(DEFAULT_YEARS);
        let t =
            reference::exponential_kernel(DEFAULT_R0, params.p0_base, params.gamma, DEFAULT_YEARS);
        let r_dir = reference::invert_direct(&r, &t).expect("default r yields a nonnegative r_dir");
        EmpiricalCurves::new(m_dir, F_TABLE.to_vec(), r_dir, r, DEFAULT_R0)
            .expect("default curves are valid")
    }
}

impl EmpiricalCurves {
    pub fn new(
        m_dir: Vec<f64>,
        f: Vec<f64>,
        r_dir: Vec<f64>,
        r: Vec<f64>,
        r0: f64,
    ) -> Result<Self> {
        let c = EmpiricalCurves {
            m_dir,
            f,
            r_dir,
            r,
            r0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.m_dir.len();
        if n == 0 {
            return Err(Error::InvalidInput("curves have no rows".into()));
        }
        if self.r_dir.len() != n || self.r.len() != n {
            return Err(Error::InvalidInput(format!(
                "curve lengths differ: m_dir {}, r_dir {}, r {}",
                n,
                self.r_dir.len(),
                self.r.len()
            )));
        }
        if self.f.is_empty() || self.f.len() > n {
            return Err(Error::InvalidInput(format!(
                "F needs between 1 and {n} tabulated values, got {}",
                self.f.len()
            )));
        }
        for (name, col) in [
            ("m_dir", &self.m_dir),
            ("F", &self.f),
            ("r_dir", &self.r_dir),
            ("r", &self.r),
        ] {
            if let Some(i) = col.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "{name}({}) = {} is not a finite nonnegative number",
                    i + 1,
                    col[i]
                )));
            }
        }
        if let Some(i) = (0..n).find(|&i| self.r_dir[i] > self.r[i]) {
            return Err(Error::InvalidInput(format!(
                "r_dir({}) exceeds r({})",
                i + 1,
                i + 1
            )));
        }
        let sum: f64 = self.m_dir.iter().take(DEFAULT_YEARS).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "m_dir over the first {} years sums to {sum}, expected 1",
                n.min(DEFAULT_YEARS)
            )));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "R0 must be positive, got {}",
                self.r0
            )));
        }
        Ok(())
    }

    /// Number of tabulated years.
    pub fn len(&self) -> usize {
        self.m_dir.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m_dir.is_empty()
    }

    /// m_dir(t), t from 1.
    pub fn m_dir_at(&self, t: usize) -> Result<f64> {
        if t < 1 || t > self.len() {
            return Err(Error::OutOfRange(format!(
                "m_dir is tabulated for t=1..{}, asked for t={t}",
                self.len()
            )));
        }
        Ok(self.m_dir[t - 1])
    }

    pub fn m_dir(&self) -> &[f64] {
        &self.m_dir
    }

    pub fn f_table(&self) -> &[f64] {
        &self.f
    }

    pub fn r_dir(&self) -> &[f64] {
        &self.r_dir
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_str(&text, path)
    }

    /// Reads `t,m_dir,F,r_dir,r`. An optional `# R0=<value>` line sets R0.
    pub fn from_csv_str(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: u64, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut r0 = DEFAULT_R0;
        for (i, line) in text.lines().enumerate() {
            let Some(rest) = line.trim().strip_prefix('#') else {
                continue;
            };
            if let Some((k, v)) = rest.split_once('=') {
                if k.trim() == "R0" {
                    r0 = v
                        .trim()
                        .parse()
                        .map_err(|e| perr(i as u64 + 1, format!("R0: {e}")))?;
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
        let expected = ["t", "m_dir", "F", "r_dir", "r"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(perr(1, format!("expected header `{}`", expected.join(","))));
        }
        let (mut m, mut f, mut rd, mut r) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut f_ended = false;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                perr(line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| perr(line, format!("column {}: `{}`: {e}", expected[i], &rec[i])))
            };
            let t: usize = rec[0]
                .parse()
                .map_err(|e| perr(line, format!("column t: `{}`: {e}", &rec[0])))?;
            if t != m.len() + 1 {
                return Err(perr(line, format!("expected t={}, got t={t}", m.len() + 1)));
            }
            m.push(num(1)?);
            if rec[2].is_empty() {
                f_ended = true;
            } else if f_ended {
                return Err(perr(line, "F values must be contiguous from t=1".into()));
            } else {
                f.push(num(2)?);
            }
            rd.push(num(3)?);
            r.push(num(4)?);
        }
        EmpiricalCurves::new(m, f, rd, r, r0).map_err(|e| match e {
            Error::InvalidInput(reason) => perr(0, reason),
            other => other,
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# R0={}", self.r0)?;
        writeln!(w, "t,m_dir,F,r_dir,r")?;
        for i in 0..self.len() {
            let f = self.f.get(i).map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                i + 1,
                self.m_dir[i],
                f,
                self.r_dir[i],
                self.r[i]
            )?;
        }
        Ok(())
    }
}

fn m_dir_shape(t: f64, growth: f64, kappa: f64) -> f64 {
    let x = t - TAIL_OFFSET;
    x.powf(-TAIL_EXPONENT) * (growth * t).exp() * -(-kappa * x * x).exp_m1()
}

/// Default direct-citation rate: a power-law tail (t-0.8)^-1.5 carried by
/// exponential growth, with an early-time cutoff. The cutoff width is
/// solved so the first year holds M_DIR_FIRST of the mass; the curve is
/// normalized over the first 30 years.
pub fn default_m_dir(years: usize, growth: f64) -> Vec<f64> {
    let norm = DEFAULT_YEARS.min(years).max(1);
    let first_share = |kappa: f64| {
        let total: f64 = (1..=norm)
            .map(|t| m_dir_shape(t as f64, growth, kappa))
            .sum();
        m_dir_shape(1.0, growth, kappa) / total
    };
    // first_share increases with kappa
    let (mut lo, mut hi) = (1e-4f64, 1e3f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if first_share(mid) < M_DIR_FIRST {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = 0.5 * (lo + hi);
    let raw: Vec<f64> = (1..=years)
        .map(|t| m_dir_shape(t as f64, growth, kappa))
        .collect();
    let total: f64 = raw.iter().take(norm).sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Default total reference-age profile, normalized over the first 30 years.
pub fn default_r(years: usize) -> Vec<f64> {
    let norm = DEFAULT_YEARS.min(years).max(1);
    let shape = |t: usize| (t as f64 - TAIL_OFFSET + R_SHIFT).powf(-TAIL_EXPONENT);
    let tail: f64 = (2..=norm).map(shape).sum();
    let a = (1.0 - R_FIRST) / tail;
    (1..=years)
        .map(|t| if t == 1 { R_FIRST } else { a * shape(t) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_m_dir_normalized() {
        let c = EmpiricalCurves::default();
        let s: f64 = c.m_dir().iter().take(30).sum();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
        assert!((c.m_dir_at(1).unwrap() - 0.23).abs() < 1e-9);
    }

    #[test]
    fn default_m_dir_has_slow_tail() {
        let m = EmpiricalCurves::default().m_dir().to_vec();
        // power-law decay: late ratios approach 1, unlike an exponential
        assert!(m[29] / m[28] > 0.95);
        assert!(m[1] >= m[2]);
    }

    #[test]
    fn default_r_shape() {
        let c = EmpiricalCurves::default();
        let s: f64 = c.r().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let rd = c.r_dir();
        let peak = (0..rd.len())
            .max_by(|&a, &b| rd[a].total_cmp(&rd[b]))
            .unwrap()
            + 1;
        assert_eq!(peak, 2);
        assert!(rd.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let c = EmpiricalCurves::default();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = EmpiricalCurves::from_csv_str(&text, Path::new("c.csv")).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn csv_errors_carry_line() {
        let bad = "t,m_dir,F,r_dir,r\n1,1.0,0.1,0.5,0.5\n3,0,0.1,0,0\n";
        let err = EmpiricalCurves::from_csv_str(bad, Path::new("c.csv")).unwrap_err();
        assert_eq!(err.to_string(), "c.csv:3: expected t=2, got t=3");
        let bad = "t,m_dir,F,r_dir,r\n1,1.0,x,0.5,0.5\n";
        let err = EmpiricalCurves::from_csv_str(bad, Path::new("c.csv")).unwrap_err();
        assert!(err.to_string().starts_with("c.csv:2: column F"), "{err}");
    }

    #[test]
    fn f_gap_rejected() {
        let bad = "t,m_dir,F,r_dir,r\n1,0.5,0.1,0.1,0.5\n2,0.5,,0.1,0.5\n3,0,0.1,0,0\n";
        assert!(EmpiricalCurves::from_csv_str(bad, Path::new("c")).is_err());
    }
}
