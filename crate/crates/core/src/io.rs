//! CSV and JSON file formats.
//!
//! Spectrum CSV: optional `# exposure_s=<s>` and `# axis_unit=nm|mhz` comment
//! lines, then an `axis,counts` header. A `<file>.json` sidecar with the same
//! keys may stand in for the comments. Time series: `time_s,value`. Point lists
//! for calibration fits: any two-column header.

use crate::error::{Error, Result};
use crate::fit::{FitResult, LinearFit};
use crate::noise::TimeSeries;
use crate::spectrum::{AxisUnit, Spectrum};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_number(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: '{}' is not a number", field.trim())))
}

/// Header names and rows of a two-column numeric CSV with `#` comments.
fn read_two_columns(text: &str) -> Result<(Vec<String>, Vec<(f64, f64)>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() != 2 {
        return Err(Error::Parse(format!("expected two columns, header has {}", header.len())));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(Error::Parse(format!("line {line}: expected two fields, got {}", rec.len())));
        }
        rows.push((parse_number(&rec[0], line)?, parse_number(&rec[1], line)?));
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok((header, rows))
}

fn write_two_columns(header: [&str; 2], comments: &[String], rows: impl Iterator<Item = (f64, f64)>) -> Result<String> {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()]).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub exposure_s: Option<f64>,
    pub axis_unit: Option<AxisUnit>,
}

fn header_meta(text: &str) -> Result<SpectrumMeta> {
    let mut meta = SpectrumMeta::default();
    for line in text.lines().map(str::trim).filter(|l| l.starts_with('#')) {
        let Some((key, value)) = line.trim_start_matches('#').split_once('=') else {
            continue;
        };
        match key.trim() {
            "exposure_s" => meta.exposure_s = Some(parse_number(value, 0)?),
            "axis_unit" => meta.axis_unit = Some(value.trim().parse()?),
            _ => {}
        }
    }
    Ok(meta)
}

/// Parses spectrum CSV text; `sidecar` is the JSON sidecar text, if any.
/// Header comments take precedence over the sidecar.
pub fn parse_spectrum_csv(text: &str, sidecar: Option<&str>) -> Result<Spectrum> {
    let mut meta = header_meta(text)?;
    if let Some(js) = sidecar {
        let side: SpectrumMeta = serde_json::from_str(js).map_err(|e| Error::Parse(format!("sidecar: {e}")))?;
        meta.exposure_s = meta.exposure_s.or(side.exposure_s);
        meta.axis_unit = meta.axis_unit.or(side.axis_unit);
    }
    let exposure = meta
        .exposure_s
        .ok_or_else(|| Error::Parse("spectrum lacks exposure_s in header comments or sidecar".into()))?;
    let unit = meta
        .axis_unit
        .ok_or_else(|| Error::Parse("spectrum lacks axis_unit in header comments or sidecar".into()))?;
    let (header, rows) = read_two_columns(text)?;
    if header != ["axis", "counts"] {
        return Err(Error::Parse(format!("spectrum header must be 'axis,counts', got '{}'", header.join(","))));
    }
    let (axis, counts) = rows.into_iter().unzip();
    Spectrum::new(axis, counts, exposure, unit)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let text = read_text(path)?;
    let side = sidecar_path(path);
    let sidecar = if side.exists() { Some(read_text(&side)?) } else { None };
    parse_spectrum_csv(&text, sidecar.as_deref())
}

pub fn format_spectrum_csv(s: &Spectrum) -> Result<String> {
    let comments = [
        format!("exposure_s={}", s.exposure),
        format!("axis_unit={}", s.unit.as_str()),
    ];
    write_two_columns(["axis", "counts"], &comments, s.axis.iter().cloned().zip(s.counts.iter().cloned()))
}

pub fn write_spectrum(path: &Path, s: &Spectrum) -> Result<()> {
    write_text(path, &format_spectrum_csv(s)?)
}

pub fn parse_time_series_csv(text: &str) -> Result<TimeSeries> {
    let (header, rows) = read_two_columns(text)?;
    if header != ["time_s", "value"] {
        return Err(Error::Parse(format!("time series header must be 'time_s,value', got '{}'", header.join(","))));
    }
    let (t, v) = rows.into_iter().unzip();
    TimeSeries::new(t, v)
}

pub fn read_time_series(path: &Path) -> Result<TimeSeries> {
    parse_time_series_csv(&read_text(path)?)
}

pub fn format_time_series_csv(ts: &TimeSeries) -> Result<String> {
    write_two_columns(["time_s", "value"], &[], ts.times.iter().cloned().zip(ts.values.iter().cloned()))
}

pub fn write_time_series(path: &Path, ts: &TimeSeries) -> Result<()> {
    write_text(path, &format_time_series_csv(ts)?)
}

/// Two-column point list with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    pub columns: [String; 2],
    pub points: Vec<(f64, f64)>,
}

pub fn parse_points_csv(text: &str) -> Result<PointTable> {
    let (header, points) = read_two_columns(text)?;
    Ok(PointTable {
        columns: [header[0].clone(), header[1].clone()],
        points,
    })
}

pub fn read_points(path: &Path) -> Result<PointTable> {
    parse_points_csv(&read_text(path)?)
}

pub fn format_points_csv(columns: [&str; 2], points: &[(f64, f64)], comments: &[String]) -> Result<String> {
    write_two_columns(columns, comments, points.iter().cloned())
}

pub fn write_points(path: &Path, columns: [&str; 2], points: &[(f64, f64)], comments: &[String]) -> Result<()> {
    write_text(path, &format_points_csv(columns, points, comments)?)
}

/// JSON fit report with a row-major covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub recipe: String,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// n×n, row-major.
    pub covariance: Vec<f64>,
    pub residual_norm: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// Recipe-specific derived quantities.
    pub derived: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

fn flatten(c: &[Vec<f64>]) -> Vec<f64> {
    c.iter().flat_map(|r| r.iter().cloned()).collect()
}

impl FitReport {
    pub fn new(recipe: &str, names: &[&str], params: &[f64], covariance: &[Vec<f64>], residual_norm: f64) -> Self {
        FitReport {
            recipe: recipe.to_string(),
            param_names: names.iter().map(|s| s.to_string()).collect(),
            params: params.to_vec(),
            std_errors: (0..params.len()).map(|i| covariance[i][i].max(0.0).sqrt()).collect(),
            covariance: flatten(covariance),
            residual_norm,
            n_iterations: 0,
            converged: true,
            derived: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn from_fit(recipe: &str, names: &[&str], fit: &FitResult) -> Self {
        let mut r = Self::new(recipe, names, &fit.params, &fit.covariance, fit.residual_norm);
        r.n_iterations = fit.n_iterations;
        r.converged = fit.converged;
        r
    }

    pub fn from_linear(recipe: &str, names: &[&str], fit: &LinearFit) -> Self {
        Self::new(recipe, names, &fit.coeffs, &fit.covariance, fit.rss.sqrt())
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.derived.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Covariance entry (i, j).
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.params.len() + j]
    }

    /// Plain-text table of parameters and derived values.
    pub fn summary(&self) -> String {
        let mut out = format!("{} (converged: {})\n", self.recipe, self.converged);
        for ((n, p), s) in self.param_names.iter().zip(&self.params).zip(&self.std_errors) {
            out.push_str(&format!("  {n:<16} {p:>16.8e} ± {s:.3e}\n"));
        }
        for (k, v) in &self.derived {
            out.push_str(&format!("  {k:<16} {v:>16.8e}\n"));
        }
        out.push_str(&format!("  residual_norm    {:>16.8e}\n", self.residual_norm));
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(to_json(value)? + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
