//! Gradient-boosted decision trees for weighted binary classification.
//!
//! Newton boosting on the weighted logistic loss with histogram split
//! finding, leaf-wise growth, L1/L2 leaf regularization, row bagging,
//! per-tree feature sampling and validation-AUC early stopping.

mod binning;
mod config;
mod grow;
mod model;
mod train;
mod tree;

use thiserror::Error;

pub use binning::{BinMapper, BinnedMatrix};
pub use config::TrainConfig;
pub use grow::{leaf_value, soft_threshold, split_gain};
pub use model::{GbdtModel, MODEL_VERSION};
pub use train::{gradients, train, train_weighted, weighted_log_loss, Validation};
pub use tree::{Node, Tree};

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Parse(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    IncompatibleVersion { found: u32, expected: u32 },
    #[error("model schema violation: {0}")]
    Schema(String),
}
