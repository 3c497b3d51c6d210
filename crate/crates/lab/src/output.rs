//! CSV series, JSON reports and the run manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{LabError, LabResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CSV cell. Floats print with 17 significant digits.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<usize>> for Cell {
    fn from(v: Option<usize>) -> Self {
        v.map_or(Cell::Int(0), Cell::from)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self {
            file: file.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything one scenario run hands to the writer.
#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub name: String,
    pub config: Value,
    pub seed: u64,
    pub results: Value,
    pub warnings: Vec<String>,
    pub tables: Vec<CsvTable>,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a Value,
    seed: u64,
    results: &'a Value,
    warnings: &'a [String],
    version: &'a str,
}

/// Invocation details recorded in the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunInfo {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub workers: usize,
    pub wall_clock_seconds: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    run: &'a RunInfo,
    version: &'a str,
    files: Vec<String>,
}

/// `serde_json` formatter printing every float with 17 significant digits.
struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> LabResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn write_file(path: PathBuf, contents: &str) -> LabResult<()> {
    fs::write(&path, contents).map_err(|source| LabError::Io { path, source })
}

/// Writes every table and report into `dir`, then the manifest. File names
/// get a `<name>_` prefix when more than one scenario shares the directory.
/// Returns the paths written, manifest last.
pub fn write_outputs(
    outputs: &[ScenarioOutput],
    dir: &Path,
    run: &RunInfo,
) -> LabResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| LabError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let prefixed = outputs.len() > 1;
    let mut files = Vec::new();
    for out in outputs {
        let name = |file: &str| {
            if prefixed {
                format!("{}_{file}", out.name)
            } else {
                file.to_string()
            }
        };
        for table in &out.tables {
            let file = name(&table.file);
            write_file(dir.join(&file), &table.render())?;
            files.push(file);
        }
        let report = Report {
            config: &out.config,
            seed: out.seed,
            results: &out.results,
            warnings: &out.warnings,
            version: VERSION,
        };
        let file = format!("{}_report.json", out.name);
        write_file(dir.join(&file), &to_json(&report)?)?;
        files.push(file);
    }
    files.push("manifest.json".to_string());
    let manifest = Manifest {
        run,
        version: VERSION,
        files: files.clone(),
    };
    write_file(dir.join("manifest.json"), &to_json(&manifest)?)?;
    Ok(files.into_iter().map(|f| dir.join(f)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.5), "-2.5000000000000000e0");
        let v: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
        let json = to_json(&serde_json::json!({"x": 0.1, "n": 3})).unwrap();
        assert_eq!(json, "{\"n\":3,\"x\":1.0000000000000001e-1}\n");
    }

    #[test]
    fn csv_rows_follow_the_header() {
        let mut t = CsvTable::new("a.csv", &["t", "n", "tag"]);
        t.push(vec![0.5.into(), 2usize.into(), "x".into()]);
        assert_eq!(t.render(), "t,n,tag\n5.0000000000000000e-1,2,x\n");
    }
}
