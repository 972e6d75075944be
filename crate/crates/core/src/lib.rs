//! Case knowledge graph construction and completion.
//!
//! The crate covers the full flow from semi-structured case documents to a
//! completed knowledge graph:
//!
//! - [`numeric`]: PCA, Mean-Shift, circular statistics, Adam, and the
//!   finite-difference gradient oracle shared by every trainable module.
//! - [`encoder`]: the pluggable token encoder contract plus a small
//!   trainable convolutional reference encoder.
//! - [`tagger`]: linear-chain CRF entity tagging with BIO transition
//!   constraints, Viterbi decoding, and span metrics.
//! - [`relation`]: multitask relation classification with a translational
//!   embedding auxiliary loss.
//! - [`kge`]: RotatE-style rotational knowledge-graph embeddings, the
//!   multi-semantic relation extension (angle extraction, PCA, Mean-Shift,
//!   component averaging, max-component completion), relation pattern
//!   checks, and filtered link-prediction evaluation.
//! - [`pipeline`]: rule-based document segmentation and extraction, the
//!   document-to-graph orchestration, graph export, and a synthetic corpus
//!   generator for end-to-end testing.

pub mod checkpoint;
pub mod encoder;
pub mod error;
pub mod kge;
pub mod numeric;
pub mod pipeline;
pub mod relation;
pub mod tagger;

pub use error::{Error, Result};
