//! Cross-set leakage check: does any synthetic identity match a real one?
//!
//! Scores every (synthetic image, training image) pair and reports those
//! strictly above the threshold — the same match convention used everywhere
//! in the crate. An empty result certifies no leakage at that threshold.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};
use crate::similarity::cosine_similarity;

/// One above-threshold cross-set pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageMatch {
    pub synthetic_id: String,
    pub training_id: String,
    pub score: f64,
}

/// All cross-set matches above `threshold`, sorted by descending score
/// (ties by synthetic then training id).
pub fn leakage_check(
    synthetic: &EmbeddingSet,
    training: &EmbeddingSet,
    threshold: f64,
) -> Result<Vec<LeakageMatch>> {
    if synthetic.dim() != training.dim() {
        return Err(Error::InvalidArgument(format!(
            "dim mismatch: synthetic {} vs training {}",
            synthetic.dim(),
            training.dim()
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "threshold must be finite, got {threshold}"
        )));
    }

    let mut matches: Vec<LeakageMatch> = synthetic
        .entries()
        .par_iter()
        .map(|syn| {
            let mut local = Vec::new();
            for train in training.entries() {
                let score = cosine_similarity(&syn.vector, &train.vector)
                    .expect("dims checked above");
                if score > threshold {
                    local.push(LeakageMatch {
                        synthetic_id: syn.identity_id.clone(),
                        training_id: train.identity_id.clone(),
                        score,
                    });
                }
            }
            local
        })
        .reduce(Vec::new, |mut acc, mut part| {
            acc.append(&mut part);
            acc
        });

    matches.sort_unstable_by(|x, y| {
        y.score
            .partial_cmp(&x.score)
            .expect("scores are finite")
            .then_with(|| x.synthetic_id.cmp(&y.synthetic_id))
            .then_with(|| x.training_id.cmp(&y.training_id))
    });
    Ok(matches)
}

/// Write matches as CSV: `synthetic_id,training_id,score`.
pub fn write_leakage_csv(matches: &[LeakageMatch], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "synthetic_id,training_id,score").map_err(|e| Error::io(path, e))?;
    for m in matches {
        writeln!(w, "{},{},{}", m.synthetic_id, m.training_id, m.score)
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
