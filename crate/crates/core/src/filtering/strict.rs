//! Strict filtering: drop every identity involved in any false match.
//!
//! This is the blunt counterpart of the greedy strategy — both endpoints of
//! every above-threshold pair leave the dataset, so the retained set has
//! dataset-wide FMR exactly 0. Removal proceeds in ascending identity-id
//! order (a pure function of the graph); each record captures the live graph
//! state at its removal step, so a victim whose neighbors already left shows
//! the reduced degree.

use crate::error::Result;
use crate::similarity::FalseMatchGraph;

use super::greedy::RemovalState;
use super::{FilterReport, FilterStrategy};

/// Remove every identity incident to at least one edge.
pub fn strict_filter(graph: &FalseMatchGraph) -> Result<FilterReport> {
    let mut state = RemovalState::new(graph);

    let mut victims: Vec<u32> = (0..graph.node_count() as u32)
        .filter(|&v| graph.degree(v) > 0)
        .collect();
    victims.sort_unstable_by(|&a, &b| graph.ids()[a as usize].cmp(&graph.ids()[b as usize]));

    let mut removed = Vec::with_capacity(victims.len());
    let mut fmr_trace = vec![state.fmr()];
    for v in victims {
        debug_assert!(state.is_alive(v));
        removed.push(state.remove(v));
        fmr_trace.push(state.fmr());
    }
    debug_assert_eq!(*fmr_trace.last().expect("non-empty"), 0.0);

    Ok(FilterReport {
        strategy: "strict".into(),
        threshold: graph.threshold(),
        fmr_target: 0.0,
        iterations: removed.len(),
        removed,
        fmr_trace,
        retained: state.retained_sorted(),
    })
}

/// The strict strategy under its registry name. The FMR target argument is
/// ignored: the outcome is FMR 0 by construction.
pub struct StrictStrategy;

impl FilterStrategy for StrictStrategy {
    fn name(&self) -> &'static str {
        "strict"
    }

    fn description(&self) -> &'static str {
        "remove both members of every falsely matched pair (final FMR is 0)"
    }

    fn run(&self, graph: &FalseMatchGraph, _fmr_target: f64) -> Result<FilterReport> {
        strict_filter(graph)
    }
}
