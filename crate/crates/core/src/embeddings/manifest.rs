//! Dataset manifest: which image ids exist for each identity, per role.
//!
//! The manifest is the joining record between identity profiles, generated
//! images, and the embedding files extracted from them. It is stored as JSON
//! with identities in sorted order so files are byte-stable.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// identity id → role → image ids (in generation order).
    pub identities: BTreeMap<String, BTreeMap<Role, Vec<String>>>,
    /// Optional path (relative to the manifest) of the profile JSONL the
    /// identities were sampled from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles_path: Option<String>,
}

impl DatasetManifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one image for an identity under a role.
    pub fn add_image(&mut self, identity_id: &str, role: Role, image_id: &str) {
        self.identities
            .entry(identity_id.to_string())
            .or_default()
            .entry(role)
            .or_default()
            .push(image_id.to_string());
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    /// Check that every entry of `set` belongs to a manifested identity.
    pub fn validate_set(&self, set: &EmbeddingSet) -> Result<()> {
        for entry in set.entries() {
            if !self.identities.contains_key(&entry.identity_id) {
                return Err(Error::InvalidData(format!(
                    "embedding identity {:?} (image {:?}) is not in the manifest",
                    entry.identity_id, entry.image_id
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
