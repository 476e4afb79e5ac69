//! Mated / non-mated verification-score protocol.
//!
//! For every document embedding:
//!
//! - **mated**: score against each live image of the *same* identity;
//! - **non-mated**: sample up to `impostors_per_doc` distinct *other*
//!   identities (without replacement), take one uniformly chosen live image
//!   from each, and score against those.
//!
//! Impostor sampling for document `d` draws from its own RNG stream derived
//! from `(seed, d)`, so the sample never depends on other documents and runs
//! reproduce bit-identically. A document whose identity has no live images is
//! skipped (both sides) with a warning.

use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};
use crate::seeds::{rng_for, DOMAIN_EVAL_IMPOSTOR};
use crate::similarity::cosine_similarity;

/// Impostor identities sampled per document when not overridden.
pub const DEFAULT_IMPOSTORS_PER_DOC: usize = 100;

/// How a [`ScoreSample`] was drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreProtocol {
    pub impostors_per_doc: usize,
    pub rng_seed: u64,
}

/// The two score populations of a verification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSample {
    pub mated: Vec<f64>,
    pub nonmated: Vec<f64>,
    pub protocol: ScoreProtocol,
}

/// Row tag in the score CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Mated,
    Nonmated,
}

impl ScoreKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreKind::Mated => "mated",
            ScoreKind::Nonmated => "nonmated",
        }
    }
}

/// Run the verification protocol over a document set and a live set.
pub fn mated_nonmated_scores(
    docs: &EmbeddingSet,
    lives: &EmbeddingSet,
    impostors_per_doc: usize,
    seed: u64,
) -> Result<ScoreSample> {
    if docs.dim() != lives.dim() {
        return Err(Error::InvalidArgument(format!(
            "dim mismatch: documents {} vs lives {}",
            docs.dim(),
            lives.dim()
        )));
    }

    let live_groups = lives.group_by_identity();
    let identities: Vec<&str> = live_groups.keys().copied().collect();

    let mut mated = Vec::new();
    let mut nonmated = Vec::new();

    for (doc_index, doc) in docs.entries().iter().enumerate() {
        let Some(own_lives) = live_groups.get(doc.identity_id.as_str()) else {
            log::warn!(
                "document identity {:?} has no live images; skipped",
                doc.identity_id
            );
            continue;
        };
        for live in own_lives {
            mated.push(cosine_similarity(&doc.vector, &live.vector).expect("dims checked"));
        }

        // Impostor identities: everyone in lives except this identity.
        let mut pool: Vec<u32> = (0..identities.len() as u32)
            .filter(|&i| identities[i as usize] != doc.identity_id)
            .collect();
        let take = impostors_per_doc.min(pool.len());
        let mut rng = rng_for(seed, DOMAIN_EVAL_IMPOSTOR, doc_index as u64);
        // Partial Fisher–Yates: positions 0..take become the sample, drawn
        // without replacement. One uniform image per sampled identity is
        // drawn immediately, in the same stream.
        for k in 0..take {
            let j = rng.random_range(k..pool.len());
            pool.swap(k, j);
            let impostor = identities[pool[k] as usize];
            let images = &live_groups[impostor];
            let image = images[rng.random_range(0..images.len())];
            nonmated.push(cosine_similarity(&doc.vector, &image.vector).expect("dims checked"));
        }
    }

    Ok(ScoreSample {
        mated,
        nonmated,
        protocol: ScoreProtocol {
            impostors_per_doc,
            rng_seed: seed,
        },
    })
}

/// Write a score sample as CSV (`kind,score`): all mated rows, then all
/// non-mated rows, both in protocol order.
pub fn write_scores_csv(sample: &ScoreSample, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "kind,score").map_err(|e| Error::io(path, e))?;
    for s in &sample.mated {
        writeln!(w, "mated,{s}").map_err(|e| Error::io(path, e))?;
    }
    for s in &sample.nonmated {
        writeln!(w, "nonmated,{s}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a `kind,score` CSV back into (mated, nonmated) score lists.
pub fn read_scores_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::csv(path.display().to_string(), e))?;
        if headers.len() != 2 || &headers[0] != "kind" || &headers[1] != "score" {
            return Err(Error::InvalidData(format!(
                "{}: expected header kind,score",
                path.display()
            )));
        }
    }
    let mut mated = Vec::new();
    let mut nonmated = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::csv(format!("{} row {row}", path.display()), e))?;
        let score: f64 = record[1].parse().map_err(|_| {
            Error::InvalidData(format!(
                "{} row {row}: score is not a number: {:?}",
                path.display(),
                &record[1]
            ))
        })?;
        if !score.is_finite() {
            return Err(Error::InvalidData(format!(
                "{} row {row}: non-finite score",
                path.display()
            )));
        }
        match &record[0] {
            "mated" => mated.push(score),
            "nonmated" => nonmated.push(score),
            other => {
                return Err(Error::InvalidData(format!(
                    "{} row {row}: unknown score kind {other:?}",
                    path.display()
                )))
            }
        }
    }
    Ok((mated, nonmated))
}
