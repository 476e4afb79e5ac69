//! Score-distribution evaluation: mated/non-mated protocols, histograms,
//! KL divergence, attribute-shift reports, and projection export.
//!
//! The pieces compose into the standard post-curation questions:
//!
//! - *How do genuine and impostor scores distribute?* —
//!   [`mated_nonmated_scores`] then [`histogram`];
//! - *How far apart are two datasets' score distributions?* —
//!   [`kl_divergence`] over matching histograms;
//! - *Did filtering skew the attribute mix?* — [`attribute_shift_report`];
//! - *What goes into an external projection tool?* — [`export_for_projection`].

mod export;
mod histogram;
mod scores;
mod shift;
mod svg;

pub use export::{export_for_projection, load_projection_csv};
pub use histogram::{histogram, kl_divergence, ScoreHistogram, DEFAULT_BINS, DEFAULT_EPSILON, DEFAULT_RANGE};
pub use scores::{
    mated_nonmated_scores, read_scores_csv, write_scores_csv, ScoreKind, ScoreProtocol,
    ScoreSample, DEFAULT_IMPOSTORS_PER_DOC,
};
pub use shift::{attribute_shift_report, write_shift_csv, AttributeShift, ClassShift, ShiftReport};
pub use svg::{histogram_svg, shift_svg};
