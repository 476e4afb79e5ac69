//! Identity-profile sampling.
//!
//! Each profile is drawn from its own ChaCha12 stream seeded by
//! `(master_seed, profile index)`, so profile `i` never depends on how many
//! profiles are requested (prefix stability) and generation could shard
//! across workers without changing output.
//!
//! Within a profile, classes are visited in config order. A class excluded by
//! an earlier clash selection consumes no randomness. Otherwise one uniform
//! draw decides inclusion, and — when included and candidates remain — one
//! more draw picks the attribute by normalized weights. Selections apply
//! their clash rules immediately, so later classes see the exclusions.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{derive_seed, rng_for, DOMAIN_PROFILE};

use super::{has_errors, validate_config, AttributeConfig};

/// One sampled identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityProfile {
    /// Zero-padded decimal of `generation_index` by default.
    pub id: String,
    pub generation_index: u64,
    /// The per-profile derived seed (provenance; re-seeding reproduces the
    /// profile).
    pub seed: u64,
    /// class name → selected attribute label, in config class order. Classes
    /// that were not included or were clash-excluded are absent.
    pub selections: IndexMap<String, String>,
    /// Classes that were included by the inclusion draw but had every
    /// attribute clash-excluded. Empty for well-behaved configs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unsatisfiable: Vec<String>,
    /// Assembled text prompt (empty until prompt assembly runs).
    #[serde(default)]
    pub prompt: String,
}

/// Sample `count` identity profiles. Prompts are left empty; see
/// [`assemble_prompt`](super::assemble_prompt).
///
/// The config must validate without errors (warnings are allowed).
pub fn sample_profiles(
    config: &AttributeConfig,
    count: u64,
    master_seed: u64,
) -> Result<Vec<IdentityProfile>> {
    let findings = validate_config(config);
    if has_errors(&findings) {
        let text = findings
            .iter()
            .map(|f| format!("  {f}"))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(Error::InvalidConfig(text));
    }

    let mut profiles = Vec::with_capacity(usize::try_from(count).unwrap_or(0));
    for index in 0..count {
        profiles.push(sample_one(config, index, master_seed));
    }
    Ok(profiles)
}

fn sample_one(config: &AttributeConfig, index: u64, master_seed: u64) -> IdentityProfile {
    let mut rng = rng_for(master_seed, DOMAIN_PROFILE, index);
    let mut selections: IndexMap<String, String> = IndexMap::new();
    let mut excluded_classes: HashSet<&str> = HashSet::new();
    let mut excluded_attrs: HashSet<(&str, &str)> = HashSet::new();
    let mut unsatisfiable = Vec::new();

    for class in &config.classes {
        if excluded_classes.contains(class.name.as_str()) {
            continue; // no randomness consumed for excluded classes
        }
        let included = rng.random::<f64>() < class.inclusion_probability;
        if !included {
            continue;
        }
        let candidates: Vec<&super::AttributeValue> = class
            .attributes
            .iter()
            .filter(|a| !excluded_attrs.contains(&(class.name.as_str(), a.label.as_str())))
            .collect();
        if candidates.is_empty() {
            unsatisfiable.push(class.name.clone());
            continue;
        }

        let total: f64 = candidates.iter().map(|a| a.weight).sum();
        let roll = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = *candidates.last().expect("non-empty");
        for candidate in &candidates {
            acc += candidate.weight;
            if roll < acc {
                chosen = candidate;
                break;
            }
        }
        selections.insert(class.name.clone(), chosen.label.clone());

        // Apply clash rules triggered by this selection before moving on.
        for rule in &config.clash_rules {
            if rule.trigger.class != class.name || rule.trigger.attribute != chosen.label {
                continue;
            }
            for target in &rule.excluded {
                match &target.attribute {
                    Some(attr) => {
                        excluded_attrs.insert((target.class.as_str(), attr.as_str()));
                    }
                    None => {
                        excluded_classes.insert(target.class.as_str());
                    }
                }
            }
        }
    }

    IdentityProfile {
        id: format!("{index:06}"),
        generation_index: index,
        seed: derive_seed(master_seed, DOMAIN_PROFILE, index),
        selections,
        unsatisfiable,
        prompt: String::new(),
    }
}

/// Write profiles as JSON Lines (one profile per line, stable field order).
pub fn write_profiles_jsonl(profiles: &[IdentityProfile], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for profile in profiles {
        let line = serde_json::to_string(profile)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a profile JSONL file.
pub fn read_profiles_jsonl(path: &Path) -> Result<Vec<IdentityProfile>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut profiles = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let profile: IdentityProfile = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{} line {}", path.display(), i + 1), e))?;
        profiles.push(profile);
    }
    Ok(profiles)
}
