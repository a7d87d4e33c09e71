//! CSV artifacts prefixed with `#` comment lines that carry the command, the
//! resolved configuration and the hashes of any consumed model or table.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dscm_core::{Error, Result};

use crate::config::RunConfig;

/// Provenance written above the CSV header.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }
}

/// A CSV table under construction.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Formats a number in the shortest form that reads back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Like [`num`] but empty for `None`.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes `dir/name` and returns its path.
    pub fn write(&self, dir: &Path, name: &str, command: &str, cfg: &RunConfig, prov: &Provenance) -> Result<PathBuf> {
        let path = dir.join(name);
        let io = |e: std::io::Error| Error::Io {
            path: path.clone(),
            source: e,
        };
        let file = File::create(&path).map_err(io)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# dscm {command}").map_err(io)?;
        for (k, v) in &prov.entries {
            writeln!(out, "# {k} = {v}").map_err(io)?;
        }
        writeln!(out, "# config:").map_err(io)?;
        for line in cfg.to_toml()?.lines() {
            writeln!(out, "#   {line}").map_err(io)?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let csv_err = |e: csv::Error| Error::Io {
            path: path.clone(),
            source: e.into(),
        };
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(path)
    }
}

/// Creates the output directory if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}
