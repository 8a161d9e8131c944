//! Run folders: a verbatim config copy, artifacts, and `record.json`.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const RECORD_FILE: &str = "record.json";
pub const CONFIG_COPY: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    /// The effective configuration after overrides and CLI flags.
    pub config: Value,
    pub started: String,
    pub finished: String,
    /// Paths relative to the run folder.
    pub artifacts: Vec<String>,
    pub summary: Value,
    pub version: String,
}

pub fn tool_version() -> String {
    format!("complace {}", env!("CARGO_PKG_VERSION"))
}

pub fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects artifacts while a command runs.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    artifacts: Vec<String>,
    started: String,
}

impl RunDir {
    /// Creates the folder and stores the raw config text unchanged.
    pub fn create(root: &Path, raw_config: &str) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let mut dir = Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
            started: timestamp(),
        };
        dir.write(CONFIG_COPY, raw_config)?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        write_atomic(&self.path(name), contents)?;
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes the record last; every listed artifact exists at that point.
    pub fn finish(self, command: &str, config: Value, summary: Value) -> CliResult<RunRecord> {
        let record = RunRecord {
            command: command.to_string(),
            config,
            started: self.started,
            finished: timestamp(),
            artifacts: self.artifacts,
            summary,
            version: tool_version(),
        };
        let mut text = serde_json::to_string_pretty(&record)?;
        text.push('\n');
        write_atomic(&self.root.join(RECORD_FILE), &text)?;
        Ok(record)
    }
}

fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// CSV text from a header and rows, LF line endings.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io("csv buffer", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
