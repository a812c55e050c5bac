//! Dataset emission. Every table carries a two-line provenance preamble
//! (tool version, resolved config as JSON) ahead of its own column header.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// Column header line plus rows, newline terminated.
    pub body: String,
}

impl Table {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            body: body.into(),
        }
    }

    pub fn render(&self, command: &str, config: &ExperimentConfig) -> String {
        format!(
            "# rydberg-ising {VERSION} {command}\n# config {}\n{}",
            config.to_json(),
            self.body
        )
    }
}

#[derive(Serialize)]
struct Summary<'a, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a ExperimentConfig,
    results: &'a R,
}

pub fn summary_json<R: Serialize>(command: &str, config: &ExperimentConfig, results: &R) -> String {
    let doc = Summary {
        tool: "rydberg-ising",
        version: VERSION,
        command,
        config,
        results,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("summary serialises");
    s.push('\n');
    s
}

/// Writes `<command>_summary.json` and every table into `dir`; returns the paths written.
pub fn write_all<R: Serialize>(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    results: &R,
    tables: &[Table],
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::with_capacity(tables.len() + 1);
    let path = dir.join(format!("{command}_summary.json"));
    std::fs::write(&path, summary_json(command, config, results)).map_err(|e| io_err(&path, e))?;
    written.push(path);
    for t in tables {
        let path = dir.join(&t.name);
        std::fs::write(&path, t.render(command, config)).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Tab-separated row of floats in a fixed exponent format.
pub fn row(values: &[f64]) -> String {
    let mut s = values
        .iter()
        .map(|v| format!("{v:.9e}"))
        .collect::<Vec<_>>()
        .join("\t");
    s.push('\n');
    s
}
