//! Hyperparameter search over a k-fold mean-AUC objective.

mod sampler;
mod search;
mod space;

use thiserror::Error;

pub use sampler::{SamplerKind, TpeSettings};
pub use search::{
    best_trial, read_history, replay_config, run_search, run_search_with, FoldScores,
    SearchOptions, SearchOutcome, TrialRecord, TrialStatus,
};
pub use space::SearchSpace;

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("{0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed history: {0}")]
    History(String),
}
