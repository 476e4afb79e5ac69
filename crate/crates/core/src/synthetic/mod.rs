//! Synthetic embedding fixtures: per-identity clusters on the unit
//! hypersphere with controllable intra-identity spread and optional labelled
//! groups, so every curation and evaluation algorithm in the toolkit has
//! desk-scale ground truth.
//!
//! Identity centers are drawn uniformly on the sphere (a normalized standard
//! Gaussian). Each image vector is `normalize(center + intra_noise · g)` with
//! `g` standard Gaussian — a deliberately simple perturbation model (not an
//! exact spherical distribution) that is adequate for the ordering and
//! threshold behaviors the statistics here need. Generation is deterministic
//! per seed: every identity gets its own derived random stream, so output is
//! independent of thread count and stable under partial regeneration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attrs::IdentityProfile;
use crate::embeddings::{
    save_embeddings, DatasetManifest, EmbeddingEntry, EmbeddingSet, FileFormat, Role,
};
use crate::error::{Error, Result};
use crate::seeds::{derive_seed, rng_for, DOMAIN_SYNTH_ANCHOR, DOMAIN_SYNTH_IDENTITY};

/// A labelled identity group with its own spread parameters.
///
/// Groups let a fixture emulate populations whose images scatter more (larger
/// `intra_noise`) or whose identities crowd together (smaller
/// `center_spread`), which is what drives disparate removal rates under
/// similarity filtering.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub label: String,
    /// Number of identities in this group.
    pub count: usize,
    /// Image perturbation scale for identities in this group.
    pub intra_noise: f64,
    /// Scatter of identity centers around the group anchor. Smaller values
    /// pack the group's identities closer together on the sphere, producing
    /// more above-threshold cross-identity pairs.
    pub center_spread: f64,
}

/// Recipe for one synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub n_identities: usize,
    /// Embedding dimension (≥ 2).
    pub dim: usize,
    /// Image perturbation scale for ungrouped identities (ignored when
    /// `groups` covers everyone).
    pub intra_noise: f64,
    /// How many images to generate per identity for each role.
    pub images_per_identity: BTreeMap<Role, usize>,
    pub seed: u64,
    /// Optional partition of the identities into labelled groups; counts must
    /// sum to `n_identities`. Identities are assigned in order: the first
    /// `groups[0].count` identities to `groups[0]`, and so on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<GroupSpec>>,
}

impl ClusterSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "embedding dim must be at least 2, got {}",
                self.dim
            )));
        }
        if !(self.intra_noise.is_finite() && self.intra_noise >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "intra_noise must be finite and non-negative, got {}",
                self.intra_noise
            )));
        }
        if let Some(groups) = &self.groups {
            let mut labels = std::collections::HashSet::new();
            let mut total = 0usize;
            for group in groups {
                if group.label.is_empty() {
                    return Err(Error::InvalidArgument("group label is empty".into()));
                }
                if !labels.insert(group.label.as_str()) {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate group label {:?}",
                        group.label
                    )));
                }
                if !(group.intra_noise.is_finite() && group.intra_noise >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "group {:?}: intra_noise must be finite and non-negative",
                        group.label
                    )));
                }
                if !(group.center_spread.is_finite() && group.center_spread >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "group {:?}: center_spread must be finite and non-negative",
                        group.label
                    )));
                }
                total += group.count;
            }
            if total != self.n_identities {
                return Err(Error::InvalidArgument(format!(
                    "group counts sum to {total} but n_identities is {}",
                    self.n_identities
                )));
            }
        }
        Ok(())
    }
}

/// A generated fixture: embeddings per role plus the matching manifest and
/// profiles (group membership appears as a `group` attribute selection).
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    pub sets: BTreeMap<Role, EmbeddingSet>,
    pub profiles: Vec<IdentityProfile>,
}

impl SynthDataset {
    /// Write the fixture as `<role>.emb1` files plus `manifest.json` and
    /// `profiles.jsonl` under `dir`. Returns the written paths.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (role, set) in &self.sets {
            let path = dir.join(format!("{}.emb1", role.as_str()));
            save_embeddings(set, &path, FileFormat::Binary)?;
            written.push(path);
        }
        let mut manifest = self.manifest.clone();
        manifest.profiles_path = Some("profiles.jsonl".to_string());
        let manifest_path = dir.join("manifest.json");
        manifest.save(&manifest_path)?;
        written.push(manifest_path);
        let profiles_path = dir.join("profiles.jsonl");
        crate::attrs::write_profiles_jsonl(&self.profiles, &profiles_path)?;
        written.push(profiles_path);
        Ok(written)
    }
}

fn gaussian_vec(rng: &mut impl rand::Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Normalize in f64; the all-zero draw has probability zero but is handled.
fn normalize_f64(v: &mut [f64]) -> Result<()> {
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if norm_sq == 0.0 {
        return Err(Error::InvalidData(
            "degenerate zero-norm vector during generation".into(),
        ));
    }
    let norm = norm_sq.sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(())
}

struct IdentityBundle {
    profile: IdentityProfile,
    /// (role, image_id, vector), in role order then image order.
    images: Vec<(Role, String, Vec<f32>)>,
}

/// Generate the fixture described by `spec`.
///
/// Deterministic: the same spec always produces the same dataset, bit for
/// bit, regardless of thread count. With `intra_noise` 0 every image vector
/// equals its identity center exactly.
pub fn generate_clusters(spec: &ClusterSpec) -> Result<SynthDataset> {
    spec.validate()?;

    // Group anchor directions, one derived stream per group.
    let empty = Vec::new();
    let groups = spec.groups.as_ref().unwrap_or(&empty);
    let mut anchors: Vec<Vec<f64>> = Vec::with_capacity(groups.len());
    for g in 0..groups.len() {
        let mut rng = rng_for(spec.seed, DOMAIN_SYNTH_ANCHOR, g as u64);
        let mut anchor = gaussian_vec(&mut rng, spec.dim);
        normalize_f64(&mut anchor)?;
        anchors.push(anchor);
    }
    // Identity index → group index, assigning contiguous blocks in order.
    let group_of: Vec<Option<usize>> = if groups.is_empty() {
        vec![None; spec.n_identities]
    } else {
        groups
            .iter()
            .enumerate()
            .flat_map(|(g, spec)| std::iter::repeat(Some(g)).take(spec.count))
            .collect()
    };

    let bundles: Vec<IdentityBundle> = (0..spec.n_identities)
        .into_par_iter()
        .map(|i| -> Result<IdentityBundle> {
            let id = format!("{i:06}");
            let profile_seed = derive_seed(spec.seed, DOMAIN_SYNTH_IDENTITY, i as u64);
            let mut rng = rng_for(spec.seed, DOMAIN_SYNTH_IDENTITY, i as u64);

            let group = group_of[i].map(|g| &groups[g]);
            let mut center = gaussian_vec(&mut rng, spec.dim);
            if let Some(group) = group {
                let anchor = &anchors[group_of[i].expect("grouped identity")];
                for (c, a) in center.iter_mut().zip(anchor) {
                    *c = a + group.center_spread * *c;
                }
            }
            normalize_f64(&mut center)?;
            let center_f32: Vec<f32> = center.iter().map(|&x| x as f32).collect();
            let sigma = group.map_or(spec.intra_noise, |g| g.intra_noise);

            let mut images = Vec::new();
            for (&role, &count) in &spec.images_per_identity {
                for j in 0..count {
                    // Always consume the noise draw so the random stream has
                    // the same shape at every noise level: specs differing
                    // only in intra_noise share centers and noise directions.
                    let noise = gaussian_vec(&mut rng, spec.dim);
                    let vector: Vec<f32> = if sigma == 0.0 {
                        center_f32.clone()
                    } else {
                        let mut v = center.clone();
                        for (x, n) in v.iter_mut().zip(&noise) {
                            *x += sigma * n;
                        }
                        normalize_f64(&mut v)?;
                        v.iter().map(|&x| x as f32).collect()
                    };
                    images.push((role, format!("{id}_{}_{j}", role.as_str()), vector));
                }
            }

            let mut selections = indexmap::IndexMap::new();
            if let Some(group) = group {
                selections.insert("group".to_string(), group.label.clone());
            }
            Ok(IdentityBundle {
                profile: IdentityProfile {
                    id,
                    generation_index: i as u64,
                    seed: profile_seed,
                    selections,
                    unsatisfiable: Vec::new(),
                    prompt: String::new(),
                },
                images,
            })
        })
        .collect::<Result<_>>()?;

    let mut manifest = DatasetManifest::default();
    let mut sets: BTreeMap<Role, EmbeddingSet> = BTreeMap::new();
    for (&role, _) in &spec.images_per_identity {
        sets.insert(role, EmbeddingSet::new(spec.dim, role)?);
    }
    let mut profiles = Vec::with_capacity(bundles.len());
    for bundle in bundles {
        for (role, image_id, vector) in bundle.images {
            manifest.add_image(&bundle.profile.id, role, &image_id);
            sets.get_mut(&role)
                .expect("role pre-created")
                .push(EmbeddingEntry {
                    identity_id: bundle.profile.id.clone(),
                    image_id,
                    vector,
                })?;
        }
        profiles.push(bundle.profile);
    }
    Ok(SynthDataset {
        manifest,
        sets,
        profiles,
    })
}
