//! Attribute-shift reports: how filtering changed the attribute mix.
//!
//! For every attribute class, the report compares the attribute shares among
//! all profiles ("before") with the shares among the retained subset
//! ("after"). Shares are relative to the profiles that *have* the class —
//! optional classes don't drag everyone else's shares down — and that
//! denominator rule applies identically on both sides, so a class present in
//! every profile has deltas summing to zero.

use std::collections::{BTreeSet, HashSet};
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::attrs::IdentityProfile;
use crate::error::{Error, Result};

/// Share movement of one attribute label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeShift {
    pub label: String,
    pub share_before: f64,
    pub share_after: f64,
    pub delta: f64,
}

/// All attribute shifts of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShift {
    pub class: String,
    /// Profiles with a selection for this class, before filtering.
    pub present_before: usize,
    /// Retained profiles with a selection for this class.
    pub present_after: usize,
    pub attributes: Vec<AttributeShift>,
}

/// Attribute mix before vs. after filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub total_before: usize,
    pub total_after: usize,
    pub classes: Vec<ClassShift>,
}

impl ShiftReport {
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

    pub fn class(&self, name: &str) -> Option<&ClassShift> {
        self.classes.iter().find(|c| c.class == name)
    }
}

/// Compare attribute shares among `profiles` against the `retained_ids`
/// subset.
///
/// Classes appear in first-seen order over the profiles (which is config
/// order for sampled profiles); attribute labels sort lexicographically.
pub fn attribute_shift_report(
    profiles: &[IdentityProfile],
    retained_ids: &BTreeSet<String>,
) -> Result<ShiftReport> {
    let mut ids: HashSet<&str> = HashSet::with_capacity(profiles.len());
    for profile in profiles {
        if !ids.insert(&profile.id) {
            return Err(Error::InvalidData(format!(
                "duplicate profile id {:?}",
                profile.id
            )));
        }
    }
    let missing: Vec<&String> = retained_ids
        .iter()
        .filter(|id| !ids.contains(id.as_str()))
        .collect();
    if !missing.is_empty() {
        let shown: Vec<String> = missing.iter().take(5).map(|s| format!("{s:?}")).collect();
        return Err(Error::InvalidData(format!(
            "{} retained id(s) not among the profiles, e.g. {}",
            missing.len(),
            shown.join(", ")
        )));
    }

    // class → (present_before, present_after, label → (before, after)),
    // classes and labels in first-seen order (sorted later for labels).
    let mut classes: IndexMap<&str, (usize, usize, IndexMap<&str, (usize, usize)>)> =
        IndexMap::new();
    for profile in profiles {
        let retained = retained_ids.contains(&profile.id);
        for (class, label) in &profile.selections {
            let entry = classes.entry(class.as_str()).or_default();
            entry.0 += 1;
            let counts = entry.2.entry(label.as_str()).or_default();
            counts.0 += 1;
            if retained {
                entry.1 += 1;
                counts.1 += 1;
            }
        }
    }

    let share = |count: usize, denom: usize| {
        if denom == 0 {
            0.0
        } else {
            count as f64 / denom as f64
        }
    };
    let classes = classes
        .into_iter()
        .map(|(class, (present_before, present_after, labels))| {
            let mut attributes: Vec<AttributeShift> = labels
                .into_iter()
                .map(|(label, (before, after))| {
                    let share_before = share(before, present_before);
                    let share_after = share(after, present_after);
                    AttributeShift {
                        label: label.to_string(),
                        share_before,
                        share_after,
                        delta: share_after - share_before,
                    }
                })
                .collect();
            attributes.sort_unstable_by(|a, b| a.label.cmp(&b.label));
            ClassShift {
                class: class.to_string(),
                present_before,
                present_after,
                attributes,
            }
        })
        .collect();

    Ok(ShiftReport {
        total_before: profiles.len(),
        total_after: retained_ids.len(),
        classes,
    })
}

/// Render a shift report as CSV:
/// `class,label,share_before,share_after,delta`.
pub fn write_shift_csv(report: &ShiftReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "class,label,share_before,share_after,delta").map_err(|e| Error::io(path, e))?;
    let mut csv = csv::WriterBuilder::new().from_writer(Vec::new());
    for class in &report.classes {
        for attr in &class.attributes {
            csv.write_record([
                class.class.as_str(),
                attr.label.as_str(),
                &attr.share_before.to_string(),
                &attr.share_after.to_string(),
                &attr.delta.to_string(),
            ])
            .map_err(|e| Error::csv(path.display().to_string(), e))?;
        }
    }
    let body = csv
        .into_inner()
        .map_err(|e| Error::InvalidData(format!("csv flush: {e}")))?;
    w.write_all(&body).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
