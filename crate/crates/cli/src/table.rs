use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    Micro,
    Limit,
    NsLimit,
    Err,
    Stderr,
}

/// One CSV record. Coordinates are semicolon-joined; Wigner rows carry the angle in `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    #[serde(with = "sci")]
    pub eps: f64,
    #[serde(with = "sci")]
    pub tau: f64,
    #[serde(with = "sci")]
    pub kappa: f64,
    pub r: String,
    pub z: String,
    pub zp: String,
    pub i: usize,
    pub j: usize,
    pub kind: ValueKind,
    #[serde(with = "sci")]
    pub re: f64,
    #[serde(with = "sci")]
    pub im: f64,
}

mod sci {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_float(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(";")
}

pub fn join_ints(xs: &[i64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Rows plus the header metadata (`# key: value` lines).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        if self.rows.is_empty() {
            w.write_record(["experiment", "eps", "tau", "kappa", "r", "z", "zp", "i", "j", "kind", "re", "im"])
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        for row in &self.rows {
            w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, CliError> {
        let mut meta = Vec::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let schema = meta.iter().find(|(k, _)| k == "schema").map(|(_, v)| v.clone());
        if schema.as_deref() != Some(&SCHEMA_VERSION.to_string()) {
            return Err(CliError::Table(format!("expected schema {SCHEMA_VERSION}, found {schema:?}")));
        }
        let mut rows = Vec::new();
        for (k, rec) in csv::Reader::from_reader(body.as_bytes()).deserialize().enumerate() {
            rows.push(rec.map_err(|e| CliError::Table(format!("record {}: {e}", k + 1)))?);
        }
        Ok(Self { meta, rows })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceLine {
    pub eps: f64,
    pub max: f64,
    pub mean: f64,
    /// max error over the max error at the previous eps.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Convergence {
    pub experiment: String,
    pub lines: Vec<ConvergenceLine>,
    /// Least-squares slope of log max error against log eps.
    pub order: f64,
}

/// Per experiment, err rows grouped by eps from coarse to fine.
pub fn convergence(table: &ResultTable) -> Result<Vec<Convergence>, CliError> {
    let mut by_exp: BTreeMap<&str, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for row in table.rows.iter().filter(|r| r.kind == ValueKind::Err && r.eps > 0.0) {
        by_exp.entry(&row.experiment).or_default().entry(row.eps.to_bits()).or_default().push(row.re.abs());
    }
    let found = by_exp.values().map(|m| m.len()).max().unwrap_or(0);
    if found < 2 {
        return Err(CliError::InsufficientRows { found });
    }
    let mut out = Vec::new();
    for (exp, groups) in by_exp {
        if groups.len() < 2 {
            return Err(CliError::InsufficientRows { found: groups.len() });
        }
        let mut lines: Vec<ConvergenceLine> = groups
            .into_iter()
            .map(|(bits, errs)| ConvergenceLine {
                eps: f64::from_bits(bits),
                max: errs.iter().cloned().fold(0.0, f64::max),
                mean: errs.iter().sum::<f64>() / errs.len() as f64,
                ratio: None,
            })
            .collect();
        lines.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        for k in 1..lines.len() {
            lines[k].ratio = Some(lines[k].max / lines[k - 1].max);
        }
        let pts: Vec<(f64, f64)> = lines.iter().map(|l| (l.eps.ln(), l.max.ln())).collect();
        out.push(Convergence { experiment: exp.to_string(), order: slope(&pts), lines });
    }
    Ok(out)
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Plain-text convergence table.
pub fn convergence_table(table: &ResultTable) -> Result<String, CliError> {
    let mut s = String::new();
    for c in convergence(table)? {
        let _ = writeln!(s, "experiment {}", c.experiment);
        let _ = writeln!(s, "{:>12} {:>12} {:>12} {:>8}", "eps", "max err", "mean err", "ratio");
        for l in &c.lines {
            let ratio = l.ratio.map_or("-".to_string(), |r| format!("{r:.4}"));
            let _ = writeln!(s, "{:>12.5e} {:>12.4e} {:>12.4e} {:>8}", l.eps, l.max, l.mean, ratio);
        }
        let _ = writeln!(s, "fitted order {:.3}", c.order);
    }
    Ok(s)
}
