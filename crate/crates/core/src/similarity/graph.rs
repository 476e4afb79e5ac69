//! The false-match graph: identities as nodes, above-threshold pairs as edges.
//!
//! Nodes are identity ids; an edge `(a, b, score)` exists iff the document
//! embeddings of `a` and `b` score strictly above the threshold. Degree and
//! similarity-sum per node are materialized because the filtering strategies
//! consult them on every removal step.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{collect_edges_above, dataset_fmr, ScoredPair};
use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};

/// One undirected edge; `a < b` as node indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: u32,
    pub b: u32,
    pub score: f64,
}

/// Similarity scores enter ordering decisions quantized to 2⁻⁴⁰ ≈ 9e-13.
///
/// Filtering tie-breaks compare per-node similarity sums; summing floats in
/// different orders (incremental maintenance vs. fresh recomputation) can
/// disagree in the last bits, which would make "equal sums" ambiguous.
/// Comparing sums of quantized integer keys instead makes every ordering
/// decision exact and independent of summation order, while 2⁻⁴⁰ is far
/// below any meaningful similarity difference of 32-bit embeddings.
pub fn score_order_key(score: f64) -> i64 {
    (score * (1u64 << 40) as f64).round() as i64
}

/// Undirected graph of falsely matched identity pairs at a fixed threshold.
#[derive(Debug, Clone)]
pub struct FalseMatchGraph {
    threshold: f64,
    ids: Vec<String>,
    edges: Vec<GraphEdge>,
    /// Per node: (neighbor, score), neighbors ascending.
    adjacency: Vec<Vec<(u32, f64)>>,
}

impl FalseMatchGraph {
    /// Score all document pairs and keep those strictly above `threshold`.
    pub fn from_embeddings(docs: &EmbeddingSet, threshold: f64, block: usize) -> Result<Self> {
        let pairs = collect_edges_above(docs, threshold, block)?;
        let ids = docs
            .entries()
            .iter()
            .map(|e| e.identity_id.clone())
            .collect();
        Self::from_scored_pairs(ids, threshold, pairs)
    }

    /// Assemble a graph from pre-scored pairs (indices into `ids`).
    ///
    /// Rejects self-edges, duplicate pairs, out-of-range indices, and scores
    /// at or below the threshold.
    pub fn from_scored_pairs(
        ids: Vec<String>,
        threshold: f64,
        pairs: Vec<ScoredPair>,
    ) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "threshold must be finite, got {threshold}"
            )));
        }
        {
            let mut unique: HashSet<&str> = HashSet::with_capacity(ids.len());
            for id in &ids {
                if !unique.insert(id.as_str()) {
                    return Err(Error::InvalidData(format!(
                        "duplicate identity id {id:?} among graph nodes"
                    )));
                }
            }
        }
        let n = ids.len();
        let mut edges = Vec::with_capacity(pairs.len());
        let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(pairs.len());
        for pair in pairs {
            let (a, b) = if pair.a < pair.b {
                (pair.a, pair.b)
            } else {
                (pair.b, pair.a)
            };
            if a == b {
                return Err(Error::InvalidData(format!(
                    "self-edge on node {a} in false-match pairs"
                )));
            }
            if b as usize >= n {
                return Err(Error::InvalidData(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if !(pair.score > threshold) {
                return Err(Error::InvalidData(format!(
                    "edge ({a}, {b}) score {} does not exceed threshold {threshold}",
                    pair.score
                )));
            }
            if !seen.insert((a, b)) {
                return Err(Error::InvalidData(format!(
                    "duplicate edge ({a}, {b}) in false-match pairs"
                )));
            }
            edges.push(GraphEdge {
                a,
                b,
                score: pair.score,
            });
        }
        edges.sort_unstable_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));

        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.a as usize].push((e.b, e.score));
            adjacency[e.b as usize].push((e.a, e.score));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable_by_key(|&(j, _)| j);
        }

        Ok(FalseMatchGraph {
            threshold,
            ids,
            edges,
            adjacency,
        })
    }

    /// Build from named edges (`id_a`, `id_b`, score), e.g. an edge CSV.
    ///
    /// Pairs at or below `threshold` are dropped, which supports re-filtering
    /// an exported edge list at a *higher* threshold; a lower threshold than
    /// the export's would need rescoring, which a bare edge list cannot do.
    pub fn from_named_edges(
        ids: Vec<String>,
        threshold: f64,
        named: impl IntoIterator<Item = (String, String, f64)>,
    ) -> Result<Self> {
        let index: std::collections::HashMap<&str, u32> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i as u32))
            .collect();
        if index.len() != ids.len() {
            return Err(Error::InvalidData(
                "duplicate identity id among graph nodes".into(),
            ));
        }
        let mut pairs = Vec::new();
        for (a, b, score) in named {
            let &ia = index
                .get(a.as_str())
                .ok_or_else(|| Error::InvalidData(format!("edge names unknown identity {a:?}")))?;
            let &ib = index
                .get(b.as_str())
                .ok_or_else(|| Error::InvalidData(format!("edge names unknown identity {b:?}")))?;
            if score > threshold {
                pairs.push(ScoredPair {
                    a: ia,
                    b: ib,
                    score,
                });
            }
        }
        Self::from_scored_pairs(ids, threshold, pairs)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn neighbors(&self, node: u32) -> &[(u32, f64)] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adjacency[node as usize].len()
    }

    /// Sum of incident edge scores, accumulated over neighbors in ascending
    /// index order (the crate's canonical order for this sum).
    pub fn simsum(&self, node: u32) -> f64 {
        self.adjacency[node as usize]
            .iter()
            .map(|&(_, s)| s)
            .sum()
    }

    /// FMR of the full graph: edges over all unordered node pairs.
    pub fn dataset_fmr(&self) -> f64 {
        dataset_fmr(self.edge_count(), self.node_count())
    }

    /// Cross-check adjacency against the edge list (test support).
    pub fn verify_consistency(&self) -> Result<()> {
        let mut degree = vec![0usize; self.node_count()];
        let mut simsum = vec![0.0f64; self.node_count()];
        for e in &self.edges {
            if !(e.score > self.threshold) {
                return Err(Error::InvalidData(format!(
                    "edge ({}, {}) at or below threshold",
                    e.a, e.b
                )));
            }
            degree[e.a as usize] += 1;
            degree[e.b as usize] += 1;
        }
        for node in 0..self.node_count() as u32 {
            // Canonical ascending-neighbor order.
            simsum[node as usize] = self.simsum(node);
            if degree[node as usize] != self.degree(node) {
                return Err(Error::InvalidData(format!(
                    "degree mismatch at node {node}"
                )));
            }
        }
        let degree_total: usize = degree.iter().sum();
        if degree_total != 2 * self.edge_count() {
            return Err(Error::InvalidData("degree sum is not 2·edges".into()));
        }
        let simsum_total: f64 = simsum.iter().sum();
        let edge_total: f64 = self.edges.iter().map(|e| 2.0 * e.score).sum();
        if (simsum_total - edge_total).abs() > 1e-9 * edge_total.abs().max(1.0) {
            return Err(Error::InvalidData("simsum inconsistent with edges".into()));
        }
        Ok(())
    }

    /// Write the edge list as CSV: `id_a,id_b,score`.
    pub fn write_edge_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        let io_err = |e: std::io::Error| Error::io("<edge csv>", e);
        writeln!(writer, "id_a,id_b,score").map_err(io_err)?;
        for e in &self.edges {
            writeln!(
                writer,
                "{},{},{}",
                self.ids[e.a as usize], self.ids[e.b as usize], e.score
            )
            .map_err(io_err)?;
        }
        Ok(())
    }

    pub fn export_edge_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = std::io::BufWriter::new(file);
        self.write_edge_csv(&mut writer)?;
        writer.flush().map_err(|e| Error::io(path, e))
    }

    /// Read an edge CSV written by [`write_edge_csv`].
    pub fn read_edge_csv(path: &Path) -> Result<Vec<(String, String, f64)>> {
        let mut reader =
            csv::Reader::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
        {
            let headers = reader
                .headers()
                .map_err(|e| Error::csv(path.display().to_string(), e))?;
            if headers.len() != 3 || &headers[0] != "id_a" || &headers[1] != "id_b" || &headers[2] != "score" {
                return Err(Error::InvalidData(format!(
                    "{}: expected header id_a,id_b,score",
                    path.display()
                )));
            }
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let record =
                record.map_err(|e| Error::csv(format!("{} row {row}", path.display()), e))?;
            let score: f64 = record[2].parse().map_err(|_| {
                Error::InvalidData(format!(
                    "{} row {row}: score is not a number: {:?}",
                    path.display(),
                    &record[2]
                ))
            })?;
            if !score.is_finite() {
                return Err(Error::InvalidData(format!(
                    "{} row {row}: non-finite score",
                    path.display()
                )));
            }
            rows.push((record[0].to_string(), record[1].to_string(), score));
        }
        Ok(rows)
    }
}
