//! emoarc-core: reconstruct continuous valence/arousal gold standards from
//! multi-annotator discrete emotion labels, evaluate emotional-trajectory
//! predictions (CCC, Pearson, Krippendorff's alpha, error statistics at
//! every granularity), and orchestrate a 4-stage weakly supervised
//! pseudo-labeling pipeline with pluggable predictors.
//!
//! Module map:
//! - [`corpus`]: data model, TSV/JSONL ingestion, sentence splitting,
//!   low-agreement filtering, author-stratified splits
//! - [`mapping`]: label → VA table, VAD lexicon, mapping validation
//! - [`fusion`]: EWE fusion into per-story gold signals
//! - [`metrics`]: CCC, Pearson, Krippendorff's alpha, confusion matrices,
//!   absolute-error statistics
//! - [`predict`]: context windows, lexicon and linear baselines, external
//!   prediction files
//! - [`pipeline`]: the 4-stage workflow, evaluation reports, run manifests

pub mod corpus;
pub mod error;
pub mod fusion;
pub mod mapping;
pub mod metrics;
pub mod pipeline;
pub mod predict;

pub use error::{Error, Result};
