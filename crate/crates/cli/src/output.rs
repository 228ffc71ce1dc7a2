//! Tables, matrix files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use pqeva::model::write_matrix_market;
use pqeva::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:e}"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn console(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) if *x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) => format!("{x:.4e}"),
            Cell::Num(x) => format!("{x:.4}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(x.to_string()),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Inputs that determine a run's outputs. The hash covers these only, so it is
/// stable across reruns.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestInputs {
    pub config_path: String,
    pub config_sha256: String,
    pub problem: String,
    pub command: String,
    pub seed: Option<u64>,
    pub format: String,
    pub version: String,
}

impl ManifestInputs {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest inputs serialize");
        sha256_hex(&bytes)
    }
}

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    hash: &'a str,
    #[serde(flatten)]
    inputs: &'a ManifestInputs,
    output_dir: String,
    timestamp: u64,
    files: &'a [FileEntry],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Output {
    dir: PathBuf,
    format: Format,
    inputs: ManifestInputs,
    hash: String,
    files: Vec<FileEntry>,
    quiet_rows: usize,
}

impl Output {
    pub fn new(dir: &Path, format: Format, inputs: ManifestInputs) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let hash = inputs.hash();
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            inputs,
            hash,
            files: Vec::new(),
            quiet_rows: 40,
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    /// Write `table` to disk in the chosen format and print it.
    pub fn table(&mut self, table: &Table) -> Result<(), CliError> {
        self.save(table)?;
        self.print(table);
        Ok(())
    }

    /// Write `table` to disk without printing it.
    pub fn save(&mut self, table: &Table) -> Result<(), CliError> {
        let body = match self.format {
            Format::Csv => {
                let mut s = format!("# manifest {}\n{}\n", self.hash, self.columns_csv(table));
                for row in &table.rows {
                    s.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = table.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                let v = json!({ "manifest": self.hash, "columns": table.columns, "rows": rows });
                serde_json::to_string_pretty(&v).expect("table serializes") + "\n"
            }
        };
        self.write(&format!("{}.{}", table.name, self.format.ext()), body.as_bytes())
    }

    fn columns_csv(&self, table: &Table) -> String {
        table.columns.join(",")
    }

    /// Aligned console rendering; long tables are truncated on screen only.
    pub fn print(&self, table: &Table) {
        println!("== {} (manifest {})", table.name, self.hash);
        let cells: Vec<Vec<String>> = table.rows.iter().map(|r| r.iter().map(Cell::console).collect()).collect();
        let mut width: Vec<usize> = table.columns.iter().map(|c| c.len()).collect();
        for r in &cells {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |r: &[String]| {
            r.iter()
                .zip(&width)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        println!("{}", line(&table.columns));
        let shown = cells.len().min(self.quiet_rows);
        for r in &cells[..shown] {
            println!("{}", line(r));
        }
        if cells.len() > shown {
            println!("... {} more rows in {}.{}", cells.len() - shown, table.name, self.format.ext());
        }
    }

    pub fn matrix(&mut self, name: &str, a: &DMatrix<f64>) -> Result<(), CliError> {
        self.write(&format!("{name}.mtx"), write_matrix_market(a).as_bytes())
    }

    /// Write manifest.json listing every file emitted so far.
    pub fn finish(self) -> Result<String, CliError> {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = RunManifest {
            hash: &self.hash,
            inputs: &self.inputs,
            output_dir: self.dir.display().to_string(),
            timestamp,
            files: &self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(self.hash)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(seed: Option<u64>) -> ManifestInputs {
        ManifestInputs {
            config_path: "a.toml".into(),
            config_sha256: sha256_hex(b"x"),
            problem: "exp3_fourdof".into(),
            command: "eig".into(),
            seed,
            format: "csv".into(),
            version: "0".into(),
        }
    }

    #[test]
    fn hash_depends_on_inputs_only() {
        assert_eq!(inputs(Some(1)).hash(), inputs(Some(1)).hash());
        assert_ne!(inputs(Some(1)).hash(), inputs(Some(2)).hash());
        assert_eq!(inputs(None).hash().len(), 64);
    }

    #[test]
    fn csv_cells_round_trip() {
        for x in [0.1, -2.5e-17, 1e300, 3.0] {
            assert_eq!(Cell::Num(x).csv().parse::<f64>().unwrap(), x);
        }
        assert_eq!(Cell::Text("a,b".into()).csv(), "\"a,b\"");
    }
}
