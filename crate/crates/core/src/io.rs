//! Trajectory store, summaries and the metric CSVs. Every artifact carries
//! the resolved configuration: CSV files as leading `# key=value` lines,
//! JSON files under `"config"`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::continuum::Regime;
use crate::duality::MeanCitationCurve;
use crate::error::{Error, Result};
use crate::hawkes::{EnsembleSummary, PaperTrajectory};
use crate::metrics::{AutocorrBin, BinnedRateStats, PaFit};
use crate::reference::ReferenceProfile;

/// Ordered `key=value` pairs describing how an artifact was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance(pub Vec<(String, String)>);

impl Provenance {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.0.iter().cloned().collect()
    }

    pub fn write_comments<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }

    /// Reads the leading `# key=value` block of a CSV artifact.
    pub fn read_comments<R: BufRead>(r: R) -> std::io::Result<Self> {
        let mut p = Provenance::default();
        for line in r.lines() {
            let line = line?;
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            if let Some((k, v)) = rest.trim().split_once('=') {
                p.push(k.trim(), v.trim());
            }
        }
        Ok(p)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub const TRAJECTORY_HEADER: &str = "paper_id,eta,seed,t,k,K";

/// Long-format trajectory CSV, one row per paper and year.
pub fn write_trajectories<W: Write>(
    mut w: W,
    trajectories: &[PaperTrajectory],
    prov: &Provenance,
) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for tr in trajectories {
        let eta = tr.eta.map(|v| v.to_string()).unwrap_or_default();
        let seed = tr.seed.map(|v| v.to_string()).unwrap_or_default();
        for t in 1..=tr.horizon() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                tr.id,
                eta,
                seed,
                t,
                tr.k_at(t),
                tr.cum_at(t)
            )?;
        }
    }
    Ok(())
}

/// Parsed trajectory file.
#[derive(Debug, Clone)]
pub struct TrajectoryStore {
    pub trajectories: Vec<PaperTrajectory>,
    pub provenance: Provenance,
}

struct PaperRows {
    eta: Option<f64>,
    seed: Option<u64>,
    rows: BTreeMap<usize, (u64, u64)>,
}

pub fn ingest_trajectories(path: &Path) -> Result<TrajectoryStore> {
    let file = File::open(path).map_err(io_err(path))?;
    let provenance = Provenance::read_comments(BufReader::new(file)).map_err(io_err(path))?;
    let file = File::open(path).map_err(io_err(path))?;
    let mut store = read_trajectories(BufReader::new(file), path)?;
    store.provenance = provenance;
    Ok(store)
}

/// Reads and validates a trajectory CSV from any reader. Rows may come in
/// any order; papers are returned sorted by id with years ascending.
pub fn read_trajectories<R: Read>(reader: R, path: &Path) -> Result<TrajectoryStore> {
    let perr = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != TRAJECTORY_HEADER {
        let line = header.position().map(|p| p.line()).unwrap_or(1);
        return Err(perr(line, format!("expected header `{TRAJECTORY_HEADER}`")));
    }
    let mut papers: HashMap<u64, PaperRows> = HashMap::new();
    let mut rec = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(perr(line, e.to_string()));
            }
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let uint = |i: usize, name: &str| -> Result<u64> {
            let s = field(i);
            s.parse::<u64>().map_err(|_| {
                if s.starts_with('-') {
                    perr(line, format!("negative {name} `{s}`"))
                } else {
                    perr(line, format!("{name} `{s}` is not a nonnegative integer"))
                }
            })
        };
        let id = uint(0, "paper_id")?;
        let eta = match field(1) {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|_| perr(line, format!("eta `{s}` is not a number")))?,
            ),
        };
        let seed = match field(2) {
            "" => None,
            _ => Some(uint(2, "seed")?),
        };
        let t = uint(3, "t")? as usize;
        if t < 1 {
            return Err(perr(line, "years start at t=1".into()));
        }
        let k = uint(4, "count k")?;
        let cum = uint(5, "count K")?;
        let entry = papers.entry(id).or_insert_with(|| PaperRows {
            eta,
            seed,
            rows: BTreeMap::new(),
        });
        if entry.eta.map(f64::to_bits) != eta.map(f64::to_bits) || entry.seed != seed {
            return Err(perr(
                line,
                format!("paper {id}: eta/seed differ between rows"),
            ));
        }
        if entry.rows.insert(t, (k, cum)).is_some() {
            return Err(perr(line, format!("duplicate row for paper {id}, t={t}")));
        }
    }
    let mut ids: Vec<u64> = papers.keys().copied().collect();
    ids.sort_unstable();
    let mut trajectories = Vec::with_capacity(ids.len());
    for id in ids {
        let p = papers.remove(&id).expect("key listed");
        let n = p.rows.len();
        if p.rows.keys().next_back() != Some(&n) {
            return Err(Error::Trajectory {
                paper_id: id,
                reason: "years are not contiguous from t=1".into(),
            });
        }
        let k: Vec<u64> = p.rows.values().map(|r| r.0).collect();
        let tr = PaperTrajectory::from_counts(id, p.eta, p.seed, k);
        for (t, (_, cum)) in &p.rows {
            if tr.cum_at(*t) != *cum {
                return Err(Error::Trajectory {
                    paper_id: id,
                    reason: format!("K({t})={cum} but the running sum of k is {}", tr.cum_at(*t)),
                });
            }
        }
        trajectories.push(tr);
    }
    Ok(TrajectoryStore {
        trajectories,
        provenance: Provenance::default(),
    })
}

#[derive(Serialize)]
struct SnapshotJson {
    year: usize,
    /// (K, papers) pairs in increasing K.
    histogram: Vec<(u64, u64)>,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    config: BTreeMap<String, String>,
    n_papers: u64,
    horizon: usize,
    snapshots: Vec<SnapshotJson>,
    uncited_fraction: Vec<f64>,
    mean_rate: Vec<f64>,
    uncited: &'a [u64],
    citations: &'a [u64],
}

pub fn summary_json(summary: &EnsembleSummary, prov: &Provenance) -> Result<String> {
    let doc = SummaryJson {
        config: prov.to_map(),
        n_papers: summary.n_papers,
        horizon: summary.horizon,
        snapshots: summary
            .snapshots
            .iter()
            .map(|s| SnapshotJson {
                year: s.year,
                histogram: s.histogram.iter().map(|(&k, &n)| (k, n)).collect(),
            })
            .collect(),
        uncited_fraction: summary.uncited_fraction(),
        mean_rate: summary.mean_rate(),
        uncited: &summary.uncited,
        citations: &summary.citations,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// JSON document with the config block first.
pub fn json_with_config<T: Serialize>(
    body_key: &str,
    body: &T,
    prov: &Provenance,
) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("config".into(), serde_json::to_value(prov.to_map())?);
    map.insert(body_key.into(), serde_json::to_value(body)?);
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    s.push('\n');
    Ok(s)
}

fn opt(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_profile<W: Write>(
    mut w: W,
    p: &ReferenceProfile,
    prov: &Provenance,
) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "t,r_dir,r_indir,r_total")?;
    for i in 0..p.r_total.len() {
        writeln!(
            w,
            "{},{},{},{}",
            i + 1,
            p.r_dir[i],
            p.r_indir[i],
            p.r_total[i]
        )?;
    }
    Ok(())
}

pub fn write_duality<W: Write>(
    mut w: W,
    c: &MeanCitationCurve,
    prov: &Provenance,
) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "t,M,M_dir")?;
    for i in 0..c.m.len() {
        writeln!(w, "{},{},{}", i + 1, c.m[i], c.m_dir[i])?;
    }
    Ok(())
}

pub fn write_tau0<W: Write>(
    mut w: W,
    rows: &[(f64, f64)],
    prov: &Provenance,
) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "K,tau0")?;
    for (k, tau) in rows {
        writeln!(w, "{k},{tau}")?;
    }
    Ok(())
}

pub fn write_regimes<W: Write>(
    mut w: W,
    rows: &[(f64, f64, Regime)],
    prov: &Provenance,
) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "eta,K_final,regime")?;
    for (eta, k, r) in rows {
        writeln!(w, "{eta},{k},{r}")?;
    }
    Ok(())
}

pub fn write_uncited<W: Write>(mut w: W, series: &[f64], prov: &Provenance) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "t,uncited_fraction")?;
    for (i, f) in series.iter().enumerate() {
        writeln!(w, "{},{f}", i + 1)?;
    }
    Ok(())
}

pub fn write_distribution<W: Write>(
    mut w: W,
    year: usize,
    survival: &[u64],
    prov: &Provenance,
) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "year,k,papers_ge_k")?;
    for (k, n) in survival.iter().enumerate() {
        writeln!(w, "{year},{k},{n}")?;
    }
    Ok(())
}

pub fn write_binned<W: Write>(
    mut w: W,
    stats: &BinnedRateStats,
    prov: &Provenance,
) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "t,K_lo,K_hi,n,mean_K,mean_next,var_next,fano")?;
    for b in &stats.bins {
        let fano = b.fano().map(|f| f.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            b.t,
            b.lo,
            opt(b.hi),
            b.n,
            b.mean_cum,
            b.mean_next,
            b.var_next,
            fano
        )?;
    }
    Ok(())
}

pub fn write_pa_scan<W: Write>(mut w: W, fit: &PaFit, prov: &Provenance) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "K0,delta,ssr,selected")?;
    for s in &fit.scan {
        writeln!(
            w,
            "{},{},{},{}",
            s.k0,
            s.delta,
            s.ssr,
            (s.k0 == fit.k0) as u8
        )?;
    }
    Ok(())
}

pub fn write_autocorr<W: Write>(
    mut w: W,
    rows: &[(usize, Vec<AutocorrBin>)],
    prov: &Provenance,
) -> std::io::Result<()> {
    prov.write_comments(&mut w)?;
    writeln!(w, "t,K_lo,K_hi,n,mean_K,c")?;
    for (t, bins) in rows {
        for b in bins {
            let c = b.c.map(|c| c.to_string()).unwrap_or_default();
            writeln!(w, "{t},{},{},{},{},{c}", b.lo, opt(b.hi), b.n, b.mean_cum)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(text: &str) -> Result<TrajectoryStore> {
        read_trajectories(text.as_bytes(), Path::new("t.csv"))
    }

    #[test]
    fn round_trip_with_provenance() {
        let trajs = vec![
            PaperTrajectory::from_counts(0, Some(5.5), Some(17), vec![1, 0, 2]),
            PaperTrajectory::from_counts(1, Some(0.25), Some(99), vec![0, 0, 0]),
        ];
        let mut prov = Provenance::default();
        prov.push("seed", 42);
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &trajs, &prov).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=42\npaper_id,eta,seed,t,k,K\n0,5.5,17,1,1,1\n"));
        let back = store(&text).unwrap();
        assert_eq!(back.trajectories, trajs);
        let p = Provenance::read_comments(text.as_bytes()).unwrap();
        assert_eq!(p.get("seed"), Some("42"));
    }

    #[test]
    fn unsorted_rows_are_normalized() {
        let s =
            store("paper_id,eta,seed,t,k,K\n2,,,2,1,3\n1,,,1,0,0\n2,,,1,2,2\n1,,,2,0,0\n").unwrap();
        assert_eq!(s.trajectories.len(), 2);
        assert_eq!(s.trajectories[0].id, 1);
        assert_eq!(s.trajectories[1].k, vec![2, 1]);
    }

    #[test]
    fn rejects_bad_rows() {
        let e = store("paper_id,eta,seed,t,k,K\n7,,,1,2,2\n7,,,2,1,4\n").unwrap_err();
        assert!(matches!(e, Error::Trajectory { paper_id: 7, .. }), "{e}");
        let e = store("paper_id,eta,seed,t,k,K\n7,,,1,2,2\n7,,,1,2,2\n").unwrap_err();
        assert_eq!(e.to_string(), "t.csv:3: duplicate row for paper 7, t=1");
        let e = store("paper_id,eta,seed,t,k,K\n7,,,1,-2,2\n").unwrap_err();
        assert_eq!(e.to_string(), "t.csv:2: negative count k `-2`");
        let e = store("paper_id,eta,seed,t,k,K\n7,,,1,2,2\n7,,,3,0,2\n").unwrap_err();
        assert!(matches!(e, Error::Trajectory { paper_id: 7, .. }));
        assert!(store("id,t,k\n1,1,1\n").is_err());
    }
}
