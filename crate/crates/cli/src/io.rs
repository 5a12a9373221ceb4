//! File formats. Time series and error curves are tables with a time
//! column first; models, traces and summaries are JSON; eigenvalues are
//! `(re, im, source)` rows. Floats are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use erdmd::dmd::{LagSet, LaggedModel, SpectrumSource};
use erdmd::{Complex64, TimeSeries};
use faer::Mat;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(CliError::Missing(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_text(path, &text)
}

/// Labeled columns sampled at increasing times. Entries may be non-finite
/// (diverged forecasts).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub labels: Vec<String>,
    pub t: Vec<f64>,
    /// One row per time.
    pub rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    labels: Vec<String>,
    t: Vec<f64>,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn from_series(ts: &TimeSeries, labels: &[String]) -> Self {
        let data = ts.data();
        Self {
            labels: labels.to_vec(),
            t: (0..ts.len()).map(|j| ts.time(j)).collect(),
            rows: (0..ts.len())
                .map(|j| (0..ts.state_dim()).map(|i| data[(i, j)]).collect())
                .collect(),
        }
    }

    /// Rebuilds a uniformly sampled series. The step is taken from the
    /// first and last times.
    pub fn to_series(&self, path: &Path) -> Result<TimeSeries> {
        let bad = |message: String| CliError::Malformed {
            path: path.to_path_buf(),
            message,
        };
        let n = self.t.len();
        if n < 2 {
            return Err(bad(format!("{n} samples, need at least 2")));
        }
        let t0 = self.t[0];
        let dt = (self.t[n - 1] - t0) / (n - 1) as f64;
        for (j, &t) in self.t.iter().enumerate() {
            let expected = t0 + j as f64 * dt;
            if (t - expected).abs() > 1e-6 * dt {
                return Err(bad(format!(
                    "time {t} at row {j} breaks the uniform step {dt}"
                )));
            }
        }
        let s = self.labels.len();
        let data = Mat::from_fn(s, n, |i, j| self.rows[j][i]);
        TimeSeries::new(data, dt, t0).map_err(|e| bad(e.to_string()))
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (t, row) in self.t.iter().zip(&self.rows) {
            write!(out, "{t}").expect("string write");
            for v in row {
                write!(out, ",{v}").expect("string write");
            }
            out.push('\n');
        }
        out
    }

    fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let bad = |message: String| CliError::Malformed {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let mut cols = header.split(',').map(|c| c.trim().to_string());
        cols.next();
        let labels: Vec<String> = cols.collect();
        let (mut t, mut rows) = (Vec::new(), Vec::new());
        for (k, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| bad(format!("data row {k}: {e}")))?;
            if vals.len() != labels.len() + 1 {
                return Err(bad(format!(
                    "data row {k} has {} fields, header has {}",
                    vals.len(),
                    labels.len() + 1
                )));
            }
            t.push(vals[0]);
            rows.push(vals[1..].to_vec());
        }
        Ok(Self { labels, t, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        match format_of(path)? {
            Format::Csv => write_text(path, &self.to_csv()),
            Format::Json => write_json(
                path,
                &TableJson {
                    labels: self.labels.clone(),
                    t: self.t.clone(),
                    rows: self
                        .rows
                        .iter()
                        .map(|r| r.iter().map(|&v| v.is_finite().then_some(v)).collect())
                        .collect(),
                },
            ),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        match format_of(path)? {
            Format::Csv => Self::from_csv(&read_text(path)?, path),
            Format::Json => {
                let j: TableJson = read_json(path)?;
                Ok(Self {
                    labels: j.labels,
                    t: j.t,
                    rows: j
                        .rows
                        .into_iter()
                        .map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
                        .collect(),
                })
            }
        }
    }
}

fn format_of(path: &Path) -> Result<Format> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        _ => Err(CliError::Malformed {
            path: path.to_path_buf(),
            message: "expected a .csv or .json extension".into(),
        }),
    }
}

/// `dir/stem.ext` for the chosen format.
pub fn artifact(dir: &Path, stem: &str, format: Format) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

/// The existing `dir/stem.csv` or `dir/stem.json`, CSV first.
pub fn find_artifact(dir: &Path, stem: &str) -> Option<PathBuf> {
    [Format::Csv, Format::Json]
        .into_iter()
        .map(|f| artifact(dir, stem, f))
        .find(|p| p.is_file())
}

pub fn write_series(path: &Path, ts: &TimeSeries, labels: &[String]) -> Result<()> {
    Table::from_series(ts, labels).write(path)
}

pub fn read_series(path: &Path) -> Result<(TimeSeries, Vec<String>)> {
    let table = Table::read(path)?;
    let ts = table.to_series(path)?;
    Ok((ts, table.labels))
}

/// Lagged model on disk: lag list plus one row-major matrix per lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub state_dim: usize,
    pub lags: Vec<usize>,
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl ModelFile {
    pub fn from_model(model: &LaggedModel) -> Self {
        let s = model.state_dim();
        Self {
            state_dim: s,
            lags: model.lags().as_slice().to_vec(),
            matrices: model
                .matrices()
                .iter()
                .map(|m| {
                    (0..s)
                        .map(|i| (0..s).map(|j| m[(i, j)]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<LaggedModel> {
        let s = self.state_dim;
        let mut mats = Vec::with_capacity(self.matrices.len());
        for m in &self.matrices {
            if m.len() != s || m.iter().any(|r| r.len() != s) {
                return Err(CliError::Core(erdmd::Error::Dimension(format!(
                    "model matrix is not {s}x{s}"
                ))));
            }
            mats.push(Mat::from_fn(s, s, |i, j| m[i][j]));
        }
        Ok(LaggedModel::new(LagSet::new(self.lags.clone())?, mats)?)
    }
}

pub fn write_model(path: &Path, model: &LaggedModel) -> Result<()> {
    write_json(path, &ModelFile::from_model(model))
}

pub fn read_model(path: &Path) -> Result<LaggedModel> {
    read_json::<ModelFile>(path)?.to_model()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub source: SpectrumSource,
}

impl Eigenvalue {
    pub fn new(z: Complex64, source: SpectrumSource) -> Self {
        Self {
            re: z.re,
            im: z.im,
            source,
        }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

pub fn write_eigenvalues(path: &Path, values: &[Eigenvalue]) -> Result<()> {
    match format_of(path)? {
        Format::Json => write_json(path, &values),
        Format::Csv => {
            let mut out = String::from("re,im,source\n");
            for e in values {
                writeln!(out, "{},{},{}", e.re, e.im, e.source.as_str()).expect("string write");
            }
            write_text(path, &out)
        }
    }
}

pub fn read_eigenvalues(path: &Path) -> Result<Vec<Eigenvalue>> {
    match format_of(path)? {
        Format::Json => read_json(path),
        Format::Csv => {
            let text = read_text(path)?;
            let bad = |k: usize| CliError::Malformed {
                path: path.to_path_buf(),
                message: format!("eigenvalue row {k}"),
            };
            text.lines()
                .skip(1)
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(k, line)| {
                    let f: Vec<&str> = line.split(',').map(str::trim).collect();
                    if f.len() != 3 {
                        return Err(bad(k));
                    }
                    Ok(Eigenvalue {
                        re: f[0].parse().map_err(|_| bad(k))?,
                        im: f[1].parse().map_err(|_| bad(k))?,
                        source: SpectrumSource::parse(f[2]).ok_or_else(|| bad(k))?,
                    })
                })
                .collect()
        }
    }
}
