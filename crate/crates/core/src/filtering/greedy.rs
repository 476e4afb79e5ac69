//! Greedy FMR-targeted filtering and the shared removal bookkeeping.
//!
//! The greedy loop removes exactly one identity per iteration — the one with
//! the highest current false-match degree — until the dataset-wide FMR of the
//! remaining identities reaches the target. The FMR denominator shrinks as
//! identities leave: it is always `C(remaining, 2)`.
//!
//! Ordering is a pure function of the graph. Ties on degree fall back to the
//! larger incident-similarity sum, then to the smaller identity id. The
//! similarity sums enter that comparison through the quantized
//! [`score_order_key`] so the decision is exact integer arithmetic —
//! incremental maintenance and from-scratch recomputation can never disagree
//! about a tie.

use crate::error::{Error, Result};
use crate::similarity::{dataset_fmr, score_order_key, FalseMatchGraph};

use super::{FilterReport, FilterStrategy, RemovalRecord};

/// Incrementally maintained view of the graph as identities are removed.
///
/// Removing a node costs O(degree); degree, similarity-sum key, and the live
/// edge count are updated in place. Shared by the greedy and strict
/// strategies so both report identical per-step state for identical steps.
pub(super) struct RemovalState<'g> {
    graph: &'g FalseMatchGraph,
    alive: Vec<bool>,
    degree: Vec<usize>,
    /// Quantized incident-similarity sum (order-exact under ± of keys).
    key: Vec<i64>,
    alive_nodes: usize,
    alive_edges: usize,
}

impl<'g> RemovalState<'g> {
    pub(super) fn new(graph: &'g FalseMatchGraph) -> Self {
        let n = graph.node_count();
        let mut degree = vec![0usize; n];
        let mut key = vec![0i64; n];
        for v in 0..n as u32 {
            degree[v as usize] = graph.degree(v);
            key[v as usize] = graph
                .neighbors(v)
                .iter()
                .map(|&(_, s)| score_order_key(s))
                .sum();
        }
        RemovalState {
            graph,
            alive: vec![true; n],
            degree,
            key,
            alive_nodes: n,
            alive_edges: graph.edge_count(),
        }
    }

    pub(super) fn fmr(&self) -> f64 {
        dataset_fmr(self.alive_edges, self.alive_nodes)
    }

    pub(super) fn is_alive(&self, v: u32) -> bool {
        self.alive[v as usize]
    }

    /// The node the greedy strategy removes next: maximal degree, then
    /// maximal similarity-sum key, then smallest identity id.
    pub(super) fn argmax(&self) -> Option<u32> {
        let ids = self.graph.ids();
        let mut best: Option<u32> = None;
        for v in 0..self.alive.len() {
            if !self.alive[v] {
                continue;
            }
            let candidate = v as u32;
            best = match best {
                None => Some(candidate),
                Some(cur) => {
                    let c = (self.degree[v], self.key[v]);
                    let b = (self.degree[cur as usize], self.key[cur as usize]);
                    if c > b || (c == b && ids[v] < ids[cur as usize]) {
                        Some(candidate)
                    } else {
                        Some(cur)
                    }
                }
            };
        }
        best
    }

    /// Remove `v`, updating neighbors, and return its state at removal.
    ///
    /// The reported similarity sum is a fresh `f64` sum over the still-alive
    /// neighbors in ascending index order — the crate's canonical order —
    /// not the quantized key.
    pub(super) fn remove(&mut self, v: u32) -> RemovalRecord {
        assert!(self.alive[v as usize], "removing a removed node");
        let mut simsum = 0.0f64;
        let mut dropped = 0usize;
        for &(u, s) in self.graph.neighbors(v) {
            if !self.alive[u as usize] {
                continue;
            }
            simsum += s;
            dropped += 1;
            self.degree[u as usize] -= 1;
            self.key[u as usize] -= score_order_key(s);
        }
        let record = RemovalRecord {
            identity_id: self.graph.ids()[v as usize].clone(),
            degree_at_removal: self.degree[v as usize],
            simsum_at_removal: simsum,
        };
        debug_assert_eq!(record.degree_at_removal, dropped);
        self.alive[v as usize] = false;
        self.alive_nodes -= 1;
        self.alive_edges -= dropped;
        self.degree[v as usize] = 0;
        self.key[v as usize] = 0;
        record
    }

    /// Ids still alive, sorted lexicographically.
    pub(super) fn retained_sorted(&self) -> Vec<String> {
        let mut retained: Vec<String> = self
            .graph
            .ids()
            .iter()
            .enumerate()
            .filter(|&(v, _)| self.alive[v])
            .map(|(_, id)| id.clone())
            .collect();
        retained.sort_unstable();
        retained
    }
}

/// Greedily remove identities until the dataset FMR reaches `fmr_target`.
pub fn filter_to_fmr_target(graph: &FalseMatchGraph, fmr_target: f64) -> Result<FilterReport> {
    if !(0.0..=1.0).contains(&fmr_target) {
        return Err(Error::InvalidArgument(format!(
            "fmr target must be in [0, 1], got {fmr_target}"
        )));
    }
    let mut state = RemovalState::new(graph);
    let mut removed = Vec::new();
    let mut fmr_trace = vec![state.fmr()];
    while *fmr_trace.last().expect("non-empty") > fmr_target {
        let v = state
            .argmax()
            .expect("positive FMR requires a live node");
        removed.push(state.remove(v));
        fmr_trace.push(state.fmr());
    }
    Ok(FilterReport {
        strategy: "fmr-target".into(),
        threshold: graph.threshold(),
        fmr_target,
        iterations: removed.len(),
        removed,
        fmr_trace,
        retained: state.retained_sorted(),
    })
}

/// The greedy strategy under its registry name.
pub struct FmrTargetStrategy;

impl FilterStrategy for FmrTargetStrategy {
    fn name(&self) -> &'static str {
        "fmr-target"
    }

    fn description(&self) -> &'static str {
        "greedy max-degree removal until the dataset FMR reaches the target"
    }

    fn run(&self, graph: &FalseMatchGraph, fmr_target: f64) -> Result<FilterReport> {
        filter_to_fmr_target(graph, fmr_target)
    }
}
