//! Machine-readable run summaries.
//!
//! Every subcommand drops a `summary-<command>.json` next to its outputs so a
//! multi-stage pipeline can be audited afterwards: what ran, with which
//! arguments and seed, reading and writing which files, and how long it took.
//! Timestamps live only here — the primary artifacts stay byte-reproducible.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use identikit::{Error, Result};
use serde::Serialize;

#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'a str,
    version: &'static str,
    argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started_unix_ms: u64,
    wall_time_ms: u64,
}

/// Collects what a command touches, then writes the summary.
pub struct RunContext {
    output_dir: PathBuf,
    started: Instant,
    started_unix_ms: u64,
    seed: Option<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl RunContext {
    pub fn new(output_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
        let started_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        Ok(RunContext {
            output_dir: output_dir.to_path_buf(),
            started: Instant::now(),
            started_unix_ms,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn output_dir(&self) -> &Path {
        &self.output_dir
    }

    /// Record the seed governing this run's randomness.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Record an input file and hand the path back.
    pub fn input(&mut self, path: &Path) -> PathBuf {
        self.inputs.push(path.display().to_string());
        path.to_path_buf()
    }

    /// Resolve an output path (relative paths land under the output
    /// directory), create its parent, and record it.
    pub fn output(&mut self, path: &Path) -> Result<PathBuf> {
        let resolved = if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.output_dir.join(path)
        };
        if let Some(parent) = resolved.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        self.outputs.push(resolved.display().to_string());
        Ok(resolved)
    }

    /// Record an output path that was already resolved elsewhere.
    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write `summary-<command>.json` into the output directory.
    pub fn finish(self, command: &str) -> Result<()> {
        let summary = RunSummary {
            command,
            version: env!("CARGO_PKG_VERSION"),
            argv: std::env::args().collect(),
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix_ms: self.started_unix_ms,
            wall_time_ms: self.started.elapsed().as_millis() as u64,
        };
        let path = self.output_dir.join(format!("summary-{command}.json"));
        let mut text = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
