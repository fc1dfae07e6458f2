//! Result records, the key-value summary file and CSV series.
//!
//! Reals are written in decimal with 17 significant digits, which recovers
//! every `f64` exactly on parsing. Wall time is kept out of these files so
//! repeated runs reproduce them byte for byte.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats `x` with 17 significant digits: positional for moderate
/// magnitudes, scientific otherwise; `inf`, `-inf`, `NaN` for non-finite.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0000000000000000".into() } else { "0.0000000000000000".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        if frac.is_empty() {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    } else {
        format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Whether `text` parses back to exactly this cell.
    pub fn matches(&self, text: &str) -> bool {
        match self {
            Cell::Int(v) => text.parse::<i64>().ok() == Some(*v),
            Cell::Real(v) => text.parse::<f64>().is_ok_and(|p| p.to_bits() == v.to_bits() || (p.is_nan() && v.is_nan())),
            Cell::Text(v) => text == v,
            Cell::Bool(v) => text.parse::<bool>().ok() == Some(*v),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => f.write_str(&fmt_real(*v)),
            Cell::Text(v) => f.write_str(v),
            Cell::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// One CSV file: a header and rows in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Series {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// Everything a study produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub study: String,
    pub config: RunConfig,
    pub values: Vec<(String, Cell)>,
    pub series: Vec<Series>,
    pub warnings: Vec<String>,
    /// False when a study ran but its checks failed (`selfcheck`).
    pub ok: bool,
}

impl Record {
    pub fn new(study: &str, config: &RunConfig) -> Self {
        Self { study: study.into(), config: config.clone(), values: Vec::new(), series: Vec::new(), warnings: Vec::new(), ok: true }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Cell>) {
        self.values.push((key.into(), value.into()));
    }

    pub fn value(&self, key: &str) -> Option<&Cell> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn warn(&mut self, text: Option<String>) {
        self.warnings.extend(text);
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("version = {VERSION}\nstudy = {}\n", self.study));
        for (k, v) in self.config.entries() {
            out.push_str(&format!("config.{k} = {v}\n"));
        }
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str(&format!("warnings = {}\n", self.warnings.len()));
        for (i, w) in self.warnings.iter().enumerate() {
            out.push_str(&format!("warning.{} = {w}\n", i + 1));
        }
        for s in &self.series {
            out.push_str(&format!("file.{} = {}\n", s.name, s.file_name()));
        }
        out
    }

    /// Writes `summary.txt` and one CSV per series into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let summary = dir.join("summary.txt");
        fs::write(&summary, self.summary()).map_err(|e| io_error(&summary, e))?;
        let mut written = vec![summary];
        for s in &self.series {
            let path = dir.join(s.file_name());
            write_csv(&path, s)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

fn csv_error(path: &Path, source: csv::Error) -> CliError {
    CliError::Csv { path: path.display().to_string(), source }
}

pub fn write_csv(path: &Path, series: &Series) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(&series.header).map_err(|e| csv_error(path, e))?;
    for row in &series.rows {
        w.write_record(row.iter().map(Cell::to_string)).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Header and raw rows of a CSV file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| csv_error(path, e))?;
    Ok((header, rows))
}

/// Whether the file at `path` holds exactly `series`.
pub fn round_trips(path: &Path, series: &Series) -> Result<bool, CliError> {
    let (header, rows) = read_csv(path)?;
    Ok(header == series.header
        && rows.len() == series.rows.len()
        && rows.iter().zip(&series.rows).all(|(text, cells)| text.len() == cells.len() && cells.iter().zip(text).all(|(c, t)| c.matches(t))))
}

/// Parses `key = value` lines of a summary file.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_with_seventeen_digits() {
        assert_eq!(fmt_real(std::f64::consts::LN_2), "0.69314718055994529");
        assert_eq!(fmt_real(1.0), "1.0000000000000000");
        assert_eq!(fmt_real(-12.5), "-12.500000000000000");
        assert_eq!(fmt_real(1e-3), "0.0010000000000000000");
        assert_eq!(fmt_real(2.5e-14), "2.5000000000000001e-14");
        assert_eq!(fmt_real(0.0), "0.0000000000000000");
        assert!(Cell::Real(-0.0).matches(&fmt_real(-0.0)));
        assert_eq!(fmt_real(f64::NEG_INFINITY), "-inf");
    }

    proptest! {
        #[test]
        fn reals_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assert!(Cell::Real(x).matches(&fmt_real(x)));
        }
    }

    #[test]
    fn summary_lists_config_values_and_files() {
        let cfg: RunConfig = "seed = 4".parse().unwrap();
        let mut r = Record::new("pressure", &cfg);
        r.set("pressure", 0.5);
        r.series.push(Series::new("pressure", &["n", "log_Zn", "Pn"]));
        let s = r.summary();
        let kv = parse_summary(&s);
        assert!(kv.contains(&("config.seed".into(), "4".into())));
        assert!(kv.contains(&("pressure".into(), "0.50000000000000000".into())));
        assert!(kv.contains(&("file.pressure".into(), "pressure.csv".into())));
    }
}
