//! Blocked all-pairs similarity over the upper triangle of a document set.
//!
//! Scores are streamed, never materialized: at 15k identities the full
//! triangle is ~112M pairs, and storing them as `f64` would cost ~0.9 GB.
//! Callers either consume the stream directly ([`stream_pairs`]) or keep just
//! the above-threshold edges ([`collect_edges_above`]).
//!
//! Evaluation order of the stream is documented and fixed: the triangle is
//! tiled into `block × block` squares visited row-block-major, and pairs
//! inside a square are visited row-major. Changing `block` therefore permutes
//! the stream but never changes its multiset of scores — each score is the
//! shared fixed-order dot kernel applied to the same two vectors.
//!
//! [`collect_edges_above`] parallelizes across row blocks and sorts the merged
//! edge list by pair id, so its output is identical regardless of thread
//! count and block size.

use rayon::prelude::*;

use super::dot_f64;
use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};

/// Default tile edge for blocked evaluation: 256 rows × 256 columns of f32
/// at 512 dims is ~1 MB, comfortably cache-resident.
pub const DEFAULT_BLOCK: usize = 256;

/// One above-threshold pair, by entry index into the document set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub a: u32,
    pub b: u32,
    pub score: f64,
}

/// Contiguous row-major copy of the set's vectors, for cache-friendly tiling.
struct Matrix {
    dim: usize,
    data: Vec<f32>,
}

impl Matrix {
    fn from_set(set: &EmbeddingSet) -> Matrix {
        let dim = set.dim();
        let mut data = Vec::with_capacity(set.len() * dim);
        for entry in set.entries() {
            data.extend_from_slice(&entry.vector);
        }
        Matrix { dim, data }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn check_inputs(docs: &EmbeddingSet, block: usize) -> Result<()> {
    if block == 0 {
        return Err(Error::InvalidArgument("block size must be ≥ 1".into()));
    }
    // One vector per identity; surfaces duplicate identity ids.
    docs.one_per_identity()?;
    Ok(())
}

/// Stream every unordered pair score exactly once, in the documented blocked
/// order, through `visit(i, j, score)` with `i < j` (entry indices).
pub fn stream_pairs(
    docs: &EmbeddingSet,
    block: usize,
    mut visit: impl FnMut(u32, u32, f64),
) -> Result<()> {
    check_inputs(docs, block)?;
    let n = docs.len();
    let matrix = Matrix::from_set(docs);
    let mut ib = 0;
    while ib < n {
        let i_end = (ib + block).min(n);
        let mut jb = ib;
        while jb < n {
            let j_end = (jb + block).min(n);
            for i in ib..i_end {
                let row_i = matrix.row(i);
                let j_lo = jb.max(i + 1);
                for j in j_lo..j_end {
                    let s = dot_f64(row_i, matrix.row(j)).clamp(-1.0, 1.0);
                    visit(i as u32, j as u32, s);
                }
            }
            jb = j_end;
        }
        ib = i_end;
    }
    Ok(())
}

/// All pairs with score strictly above `threshold`, sorted by `(a, b)`.
///
/// Row blocks are scored in parallel; the merge sorts by pair id, so the
/// result is byte-identical for any thread count and any block size.
pub fn collect_edges_above(
    docs: &EmbeddingSet,
    threshold: f64,
    block: usize,
) -> Result<Vec<ScoredPair>> {
    check_inputs(docs, block)?;
    if !threshold.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "threshold must be finite, got {threshold}"
        )));
    }
    let n = docs.len();
    let matrix = Matrix::from_set(docs);
    let starts: Vec<usize> = (0..n).step_by(block).collect();

    let mut edges: Vec<ScoredPair> = starts
        .par_iter()
        .map(|&ib| {
            let i_end = (ib + block).min(n);
            let mut local = Vec::new();
            let mut jb = ib;
            while jb < n {
                let j_end = (jb + block).min(n);
                for i in ib..i_end {
                    let row_i = matrix.row(i);
                    let j_lo = jb.max(i + 1);
                    for j in j_lo..j_end {
                        let s = dot_f64(row_i, matrix.row(j)).clamp(-1.0, 1.0);
                        if s > threshold {
                            local.push(ScoredPair {
                                a: i as u32,
                                b: j as u32,
                                score: s,
                            });
                        }
                    }
                }
                jb = j_end;
            }
            local
        })
        .reduce(Vec::new, |mut acc, mut part| {
            acc.append(&mut part);
            acc
        });

    edges.sort_unstable_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{EmbeddingEntry, Role};
    use rand::{Rng, SeedableRng};

    fn random_docs(n: usize, dim: usize, seed: u64) -> EmbeddingSet {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let entries = (0..n).map(|i| EmbeddingEntry {
            identity_id: format!("{i:06}"),
            image_id: format!("{i:06}_doc"),
            vector: (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
        });
        EmbeddingSet::from_entries(dim, Role::Document, entries).unwrap()
    }

    #[test]
    fn pair_counts_match_triangle() {
        for n in [1usize, 2, 3, 7] {
            let docs = random_docs(n, 5, n as u64);
            let mut count = 0usize;
            stream_pairs(&docs, 3, |_, _, _| count += 1).unwrap();
            assert_eq!(count, n * (n - 1) / 2);
        }
    }

    #[test]
    fn stream_emits_each_pair_exactly_once() {
        let docs = random_docs(23, 4, 9);
        let mut seen = std::collections::HashSet::new();
        stream_pairs(&docs, 5, |i, j, _| {
            assert!(i < j);
            assert!(seen.insert((i, j)));
        })
        .unwrap();
        assert_eq!(seen.len(), 23 * 22 / 2);
    }

    #[test]
    fn block_size_does_not_change_scores() {
        let docs = random_docs(41, 16, 10);
        let collect = |block: usize| {
            let mut scores = Vec::new();
            stream_pairs(&docs, block, |i, j, s| scores.push((i, j, s))).unwrap();
            scores.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            scores
        };
        let base = collect(1);
        for block in [2, 7, 41, 1000] {
            assert_eq!(collect(block), base, "block {block} diverged");
        }
    }

    #[test]
    fn collected_edges_are_sorted_and_strictly_above() {
        let docs = random_docs(60, 8, 11);
        let threshold = 0.2;
        let edges = collect_edges_above(&docs, threshold, 16).unwrap();
        for w in edges.windows(2) {
            assert!((w[0].a, w[0].b) < (w[1].a, w[1].b));
        }
        for e in &edges {
            assert!(e.score > threshold);
        }
        // Cross-check against the streaming path.
        let mut expected = Vec::new();
        stream_pairs(&docs, 13, |i, j, s| {
            if s > threshold {
                expected.push(ScoredPair { a: i, b: j, score: s });
            }
        })
        .unwrap();
        expected.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
        assert_eq!(edges, expected);
    }

    #[test]
    fn duplicate_identities_are_rejected() {
        let entries = [
            EmbeddingEntry {
                identity_id: "a".into(),
                image_id: "i0".into(),
                vector: vec![1.0, 0.0],
            },
            EmbeddingEntry {
                identity_id: "a".into(),
                image_id: "i1".into(),
                vector: vec![0.0, 1.0],
            },
        ];
        let docs = EmbeddingSet::from_entries(2, Role::Document, entries).unwrap();
        assert!(stream_pairs(&docs, 4, |_, _, _| {}).is_err());
        assert!(collect_edges_above(&docs, 0.5, 4).is_err());
    }
}
