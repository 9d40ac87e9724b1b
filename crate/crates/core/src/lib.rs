//! Detection of collusive retweeters recruited through blackmarket services.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`] ingests user records, labels and enrichment scores.
//! - [`features`] turns a user record into a fixed 64-dimensional vector.
//! - [`dataset`] joins feature vectors with labels into a training matrix.
//! - [`models`] holds the eight classifiers, trained from scratch.
//! - [`eval`] runs stratified cross-validation and computes metrics.
//! - [`analysis`] covers retweet-thread statistics and re-ranking flows.
//! - [`synth`] generates seeded synthetic corpora.
//! - [`serve`] is the scoring service with confidence-gated feedback.

pub mod analysis;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod models;
pub mod serve;
pub mod stats;
pub mod synth;

pub use corpus::{Class, ClassMode, Corpus, LabelMap, Post, PostKind, Profile, UserRecord};
pub use dataset::LabeledDataset;
pub use features::{ExtractionConfig, FeatureVector, FEATURE_COUNT};
pub use models::{Matrix, ModelKind, ModelSpec, TrainedModel};
