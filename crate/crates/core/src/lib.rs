//! Toolkit for curating synthetic identity datasets and evaluating their
//! biometric score distributions.
//!
//! The crate covers the non-generative half of a synthetic face-dataset
//! pipeline: everything before and after the image generator itself.
//!
//! - [`attrs`] — probabilistic identity-attribute sampling from a weighted
//!   config with clash rules, plus prompt templating for downstream
//!   text-to-image models.
//! - [`embeddings`] — typed embedding sets (document / live roles), a compact
//!   binary container format, CSV interchange, and dataset manifests.
//! - [`similarity`] — cosine similarity kernels, blocked all-pairs scoring,
//!   score-threshold calibration against a false-match-rate target, and the
//!   false-match graph built from above-threshold pairs.
//! - [`filtering`] — identity-removal strategies driven by the false-match
//!   graph: greedy max-degree removal down to an FMR target, and a strict
//!   variant that removes every matched identity.
//! - [`evaluation`] — mated/non-mated score protocols, histograms,
//!   KL divergence between score distributions, attribute-shift reports, and
//!   projection exports.
//! - [`synthetic`] — deterministic cluster-model fixture generator used for
//!   testing and benchmarking the pipeline without a face model.
//! - [`llm`] — optional chat-completion prompt expansion with transcript
//!   record/replay for deterministic tests.
//!
//! Everything randomized is driven by explicit 64-bit seeds (see [`seeds`]);
//! identical inputs and seeds produce byte-identical outputs regardless of
//! thread count.

pub mod attrs;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod filtering;
pub mod llm;
pub mod seeds;
pub mod similarity;
pub mod synthetic;

pub use error::{Error, Result};
