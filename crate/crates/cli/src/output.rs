//! Result files. Every CSV starts with a `# config-hash: <hash>` comment
//! and uses shortest round-trip decimals, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use pdirac_core::critical::TraceEntry;
use pdirac_core::io::{fmt_f64, write_field_binary, write_field_json};
use pdirac_core::{Classification, SpinorField};
use serde::Serialize;

use crate::config::{DumpFormat, RunConfig};
use crate::CliError;

/// Collects the files a command writes into one output directory.
pub struct Emitter {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    config: &'a RunConfig,
    /// Regularization actually used by `D_p`.
    eps_used: f64,
    classification: Classification,
    outputs: Vec<String>,
}

impl Emitter {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let dir = config.out_dir();
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir, hash: config.hash(), written: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut buf = format!("# config-hash: {}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).map_err(csv_err)?;
            for r in rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        self.write(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn trace(&mut self, name: &str, trace: &[TraceEntry]) -> Result<PathBuf, CliError> {
        let rows: Vec<Vec<String>> = trace
            .iter()
            .map(|t| {
                vec![
                    t.iteration.to_string(),
                    t.restart.to_string(),
                    fmt_f64(t.value),
                    fmt_f64(t.residual),
                    fmt_f64(t.norm),
                    fmt_f64(t.step),
                ]
            })
            .collect();
        self.csv(name, &["iteration", "restart", "value", "residual", "norm", "step"], &rows)
    }

    pub fn field(&mut self, stem: &str, field: &SpinorField, format: DumpFormat) -> Result<PathBuf, CliError> {
        let mut buf = Vec::new();
        let name = match format {
            DumpFormat::Json => {
                write_field_json(&mut buf, field)?;
                format!("fields/{stem}-{}.json", self.hash)
            }
            DumpFormat::Binary => {
                write_field_binary(&mut buf, field)?;
                format!("fields/{stem}-{}.bin", self.hash)
            }
        };
        self.write(&name, &buf)
    }

    /// Writes `<command>.manifest.json` (listing everything written so far)
    /// and returns the full file list.
    pub fn finish(mut self, command: &str, config: &RunConfig, eps_used: f64) -> Result<Vec<PathBuf>, CliError> {
        let outputs = self.written.iter().map(|p| p.strip_prefix(&self.dir).unwrap_or(p).display().to_string()).collect();
        let hash = self.hash.clone();
        let manifest = Manifest {
            command,
            config_hash: &hash,
            config,
            eps_used,
            classification: config.nonlinearity.classify(config.p, config.model.m),
            outputs,
        };
        self.json(&format!("{command}.manifest.json"), &manifest)?;
        Ok(self.written)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Reads a CSV written by [`Emitter::csv`], skipping the hash comment.
pub fn read_csv(path: &Path) -> Result<(String, Vec<csv::StringRecord>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let hash = first.strip_prefix("# config-hash: ").unwrap_or_default().to_string();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(csv_err)?;
    Ok((hash, rows))
}
