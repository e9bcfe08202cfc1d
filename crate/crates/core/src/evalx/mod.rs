//! Metrics, stratified folds, out-of-fold training and threshold tools.

mod cv;
mod folds;
mod metrics;
mod threshold;

use thiserror::Error;

pub use cv::{cv_train, ensemble_predict, CvResult, OofPredictions};
pub use folds::{make_folds, FoldPlan};
pub use metrics::{confusion_at, evaluate, roc_auc, Confusion, EvalReport};
pub use threshold::{
    best_threshold, optimize_threshold, sweep_csv, threshold_grid, threshold_sweep, SweepRow, ThresholdMetric,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    InvalidArgument(String),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: crate::gbdt::GbdtError,
    },
    #[error(transparent)]
    Gbdt(#[from] crate::gbdt::GbdtError),
}
