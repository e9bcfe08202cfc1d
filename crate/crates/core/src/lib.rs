//! Dosing-error screening for clinical-trial narratives.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`corpus`]: JSONL ingest, nine-field concatenation, synthetic corpora.
//! - [`medpatterns`]: the 43 handcrafted medical-pattern features.
//! - [`vectorize`]: word / character TF-IDF, feature assembly, FMX1 matrix files.
//! - [`gbdt`]: histogram gradient-boosted trees for weighted binary classification.
//! - [`evalx`]: metrics, stratified folds, out-of-fold training, thresholds.
//! - [`tune`]: hyperparameter search (TPE or random) over a k-fold AUC objective.
//! - [`experiments`]: importance aggregation, ablation, top-K selection, training dynamics.
//! - [`pipeline`]: file-level glue shared by the CLI and the end-to-end tests.

pub mod corpus;
pub mod evalx;
pub mod experiments;
pub mod gbdt;
pub mod medpatterns;
pub mod pipeline;
pub mod tune;
pub mod vectorize;

mod util;

pub use corpus::{ConcatenatedDoc, NarrativeRecord};
pub use evalx::{EvalReport, FoldPlan, OofPredictions};
pub use gbdt::{GbdtModel, TrainConfig};

pub use vectorize::{Category, FeatureRegistry, SparseMatrix};

/// Version tag written into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;
