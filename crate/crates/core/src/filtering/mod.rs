//! Identity-removal strategies over the false-match graph, plus the
//! probability model and leakage check that motivate them.
//!
//! Two strategies ship, both behind the [`FilterStrategy`] trait and
//! selectable by name at runtime:
//!
//! - `"fmr-target"` ([`filter_to_fmr_target`]) — greedy removal of the
//!   most-matched identity until the dataset-wide FMR reaches the target;
//! - `"strict"` ([`strict_filter`]) — removal of *every* identity incident to
//!   a false-match edge, leaving zero above-threshold pairs.
//!
//! Both produce a [`FilterReport`]: the ordered removal log with per-step
//! graph state, the FMR trace, and the retained identity set.

mod greedy;
mod leakage;
mod pfm;
mod strict;

pub use greedy::{filter_to_fmr_target, FmrTargetStrategy};
pub use leakage::{leakage_check, write_leakage_csv, LeakageMatch};
pub use pfm::false_match_probability;
pub use strict::{strict_filter, StrictStrategy};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::FalseMatchGraph;

/// One removal step: the identity and the graph state it had when removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalRecord {
    pub identity_id: String,
    pub degree_at_removal: usize,
    pub simsum_at_removal: f64,
}

/// Full account of one filtering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    /// Name of the strategy that produced this report.
    pub strategy: String,
    /// Similarity threshold of the underlying false-match graph.
    pub threshold: f64,
    /// FMR target the run aimed for (0 for the strict strategy).
    pub fmr_target: f64,
    /// Number of removal iterations (= `removed.len()`).
    pub iterations: usize,
    /// Removal log, in removal order.
    pub removed: Vec<RemovalRecord>,
    /// Dataset FMR before any removal, then after each removal.
    pub fmr_trace: Vec<f64>,
    /// Identities kept, sorted lexicographically.
    pub retained: Vec<String>,
}

impl FilterReport {
    /// Final dataset FMR (the trace is never empty).
    pub fn final_fmr(&self) -> f64 {
        *self.fmr_trace.last().expect("trace holds the initial FMR")
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    /// Write the retained ids, one per line.
    pub fn write_retained(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for id in &self.retained {
            writeln!(w, "{id}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Read a retained-id file (one id per line, blank lines ignored).
pub fn read_retained(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// An identity-removal strategy over a false-match graph.
///
/// `fmr_target` is interpreted per strategy; the strict strategy ignores it
/// (its outcome is FMR = 0 by construction).
pub trait FilterStrategy: Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, graph: &FalseMatchGraph, fmr_target: f64) -> Result<FilterReport>;
}

static STRATEGIES: [&dyn FilterStrategy; 2] = [&FmrTargetStrategy, &StrictStrategy];

/// Look up a registered strategy by name.
pub fn strategy(name: &str) -> Result<&'static dyn FilterStrategy> {
    STRATEGIES
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "filter strategy",
            name: name.to_string(),
            known: strategy_names().join(", "),
        })
}

/// Names of all registered strategies.
pub fn strategy_names() -> Vec<&'static str> {
    STRATEGIES.iter().map(|s| s.name()).collect()
}
