//! CSV and JSON writers. Floats in CSV use 17 significant digits so a re-run
//! reproduces files byte for byte.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::metadata::RunMetadata;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as u64)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// In-memory table rendered as CSV with a provenance comment line.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &RunMetadata) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        writeln!(buf, "{}", meta.csv_comment()).expect("write to memory");
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Failed(format!("CSV encoding failed: {e}"));
            w.write_record(&self.header).map_err(fail)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::Failed(e.to_string()))?;
        }
        Ok(buf)
    }

    pub fn write(&self, path: &Path, meta: &RunMetadata) -> Result<(), CliError> {
        write_bytes(path, &self.to_csv(meta)?)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    metadata: &'a RunMetadata,
    result: &'a T,
}

/// Writes `{"metadata": ..., "result": ...}`.
pub fn write_json<T: Serialize>(path: &Path, meta: &RunMetadata, result: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_vec_pretty(&Envelope { metadata: meta, result })
        .map_err(|e| CliError::Failed(format!("JSON encoding failed: {e}")))?;
    text.push(b'\n');
    write_bytes(path, &text)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}
