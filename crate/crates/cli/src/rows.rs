//! Report rows and their CSV / JSON persistence.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const HEADER: [&str; 11] = [
    "experiment", "N", "p", "a", "ell", "R", "seed", "metric", "value", "bound", "flag",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Pass,
    Fail,
    Exploratory,
}

impl Flag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flag::Pass => "pass",
            Flag::Fail => "fail",
            Flag::Exploratory => "exploratory",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pass" => Some(Flag::Pass),
            "fail" => Some(Flag::Fail),
            "exploratory" => Some(Flag::Exploratory),
            _ => None,
        }
    }
}

/// Where a row comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct Ctx {
    pub experiment: String,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub a: Option<f64>,
    pub ell: Option<usize>,
    pub r: Option<f64>,
    pub seed: u64,
}

impl Ctx {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            n: None,
            p: None,
            a: None,
            ell: None,
            r: None,
            seed,
        }
    }

    pub fn space(&self, n: usize, p: f64, a: f64) -> Self {
        Self {
            n: Some(n),
            p: Some(p),
            a: Some(a),
            ..self.clone()
        }
    }

    pub fn ell(&self, ell: usize) -> Self {
        Self {
            ell: Some(ell),
            ..self.clone()
        }
    }

    pub fn radius(&self, r: f64) -> Self {
        Self {
            r: Some(r),
            ..self.clone()
        }
    }

    /// Row asserting `value <= bound·(1 + tol)`.
    pub fn check(&self, metric: &str, value: f64, bound: f64, tol: f64) -> ReportRow {
        let ok = value <= bound + tol * bound.abs();
        self.row(metric, value, Some(bound), if ok { Flag::Pass } else { Flag::Fail })
    }

    pub fn explore(&self, metric: &str, value: f64) -> ReportRow {
        self.row(metric, value, None, Flag::Exploratory)
    }

    fn row(&self, metric: &str, value: f64, bound: Option<f64>, flag: Flag) -> ReportRow {
        ReportRow {
            experiment: self.experiment.clone(),
            n: self.n,
            p: self.p,
            a: self.a,
            ell: self.ell,
            r: self.r,
            seed: self.seed,
            metric: metric.to_string(),
            value,
            bound,
            flag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub a: Option<f64>,
    pub ell: Option<usize>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub seed: u64,
    pub metric: String,
    #[serde(with = "nonfinite")]
    pub value: f64,
    pub bound: Option<f64>,
    pub flag: Flag,
}

/// JSON has no NaN or infinity; those travel as strings.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// 17 significant digits, which round-trips every finite double.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl ReportRow {
    fn record(&self) -> [String; 11] {
        [
            self.experiment.clone(),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            self.p.map(fmt_float).unwrap_or_default(),
            self.a.map(fmt_float).unwrap_or_default(),
            self.ell.map(|l| l.to_string()).unwrap_or_default(),
            self.r.map(fmt_float).unwrap_or_default(),
            self.seed.to_string(),
            self.metric.clone(),
            fmt_float(self.value),
            self.bound.map(fmt_float).unwrap_or_default(),
            self.flag.as_str().to_string(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> Option<Self> {
        let f = |i: usize| rec.get(i)?.parse::<f64>().ok();
        let opt = |i: usize| match rec.get(i)? {
            "" => Some(None),
            s => s.parse::<f64>().ok().map(Some),
        };
        Some(Self {
            experiment: rec.get(0)?.to_string(),
            n: match rec.get(1)? {
                "" => None,
                s => Some(s.parse().ok()?),
            },
            p: opt(2)?,
            a: opt(3)?,
            ell: match rec.get(4)? {
                "" => None,
                s => Some(s.parse().ok()?),
            },
            r: opt(5)?,
            seed: rec.get(6)?.parse().ok()?,
            metric: rec.get(7)?.to_string(),
            value: f(8)?,
            bound: opt(9)?,
            flag: Flag::parse(rec.get(10)?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub metadata: Metadata,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn persist(rows: &[ReportRow], path: &Path, format: Format, meta: &Metadata) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    match format {
        Format::Csv => write_csv(rows, file).map_err(csv_err(path)),
        Format::Json => {
            let report = JsonReport {
                metadata: meta.clone(),
                rows: rows.to_vec(),
            };
            serde_json::to_writer_pretty(file, &report).map_err(|e| CliError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e),
            })
        }
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        rows.push(ReportRow::from_record(&rec).ok_or_else(|| CliError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("malformed row {}", i + 2)),
        })?);
    }
    Ok(rows)
}

pub fn read_json(path: &Path) -> Result<JsonReport, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })
}

/// Rows are appended to `<name>.partial.csv` as items finish, so an
/// interrupted run keeps everything completed so far. `finish` writes the
/// final artifact and removes the partial file.
pub struct Sink {
    rows: Vec<ReportRow>,
    partial: PathBuf,
    writer: csv::Writer<File>,
}

impl Sink {
    pub fn open(dir: &Path, name: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let partial = dir.join(format!("{name}.partial.csv"));
        let file = File::create(&partial).map_err(io_err(&partial))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(HEADER).map_err(csv_err(&partial))?;
        writer.flush().map_err(io_err(&partial))?;
        Ok(Self {
            rows: Vec::new(),
            partial,
            writer,
        })
    }

    pub fn push(&mut self, rows: Vec<ReportRow>) -> Result<(), CliError> {
        for row in &rows {
            self.writer.write_record(row.record()).map_err(csv_err(&self.partial))?;
        }
        self.writer.flush().map_err(io_err(&self.partial))?;
        self.rows.extend(rows);
        Ok(())
    }

    pub fn finish(self, path: &Path, format: Format, meta: &Metadata) -> Result<Vec<ReportRow>, CliError> {
        persist(&self.rows, path, format, meta)?;
        drop(self.writer);
        fs::remove_file(&self.partial).map_err(io_err(&self.partial))?;
        Ok(self.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ReportRow> {
        let c = Ctx::new("x", 7).space(3, 2.0, -0.5).ell(1).radius(0.1);
        vec![
            c.check("ratio", 0.1 + 0.2, 1.0, 1e-8),
            c.check("ratio", 1.5, 1.0, 1e-8),
            Ctx::new("y", 1).explore("v", std::f64::consts::PI / 3.0),
        ]
    }

    #[test]
    fn check_sets_flags() {
        let rows = sample();
        assert_eq!(rows[0].flag, Flag::Pass);
        assert_eq!(rows[1].flag, Flag::Fail);
        assert_eq!(rows[2].flag, Flag::Exploratory);
        assert!(rows[2].bound.is_none());
        let c = Ctx::new("z", 0);
        assert_eq!(c.check("m", 1.0 + 5e-9, 1.0, 1e-8).flag, Flag::Pass);
        assert_eq!(c.check("m", -1.0 + 5e-9, -1.0, 1e-8).flag, Flag::Pass);
        assert_eq!(c.check("m", -0.9, -1.0, 1e-8).flag, Flag::Fail);
    }

    #[test]
    fn csv_round_trips_bit_exactly() {
        let rows = sample();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        fs::write(&path, &buf).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.p, b.p);
            assert_eq!(a.r, b.r);
            assert_eq!(a.flag, b.flag);
        }
    }

    #[test]
    fn json_round_trips_exactly() {
        let mut rows = sample();
        rows.push(Ctx::new("z", 2).explore("degenerate", f64::NAN));
        let meta = Metadata {
            config_hash: "00".into(),
            seed: 9,
            version: "0".into(),
            wall_time: 0.5,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.json");
        persist(&rows, &path, Format::Json, &meta).unwrap();
        let back = read_json(&path).unwrap();
        assert_eq!(back.metadata, meta);
        assert_eq!(back.rows[..3], rows[..3]);
        assert!(back.rows[3].value.is_nan());
    }

    #[test]
    fn empty_rows_give_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "experiment,N,p,a,ell,R,seed,metric,value,bound,flag\n");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

}
