use serde::{Deserialize, Serialize};

use super::GbdtError;

/// Booster hyperparameters. Defaults are the tuned configuration
/// (learning rate 0.0054, 118 leaves, depth 9, positive weight 20.87, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub num_leaves: usize,
    pub max_depth: usize,
    pub min_child_samples: usize,
    pub lambda_l1: f64,
    pub lambda_l2: f64,
    pub feature_fraction: f64,
    pub bagging_fraction: f64,
    /// Resample rows every `bagging_freq` rounds; 0 disables bagging.
    pub bagging_freq: usize,
    pub scale_pos_weight: f64,
    /// Rounds without validation-AUC improvement before stopping; 0 disables
    /// early stopping.
    pub early_stopping_patience: usize,
    pub max_bins: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_estimators: 4000,
            learning_rate: 0.0054,
            num_leaves: 118,
            max_depth: 9,
            min_child_samples: 211,
            lambda_l1: 4.29,
            lambda_l2: 4.33,
            feature_fraction: 0.795,
            bagging_fraction: 0.813,
            bagging_freq: 1,
            scale_pos_weight: 20.87,
            early_stopping_patience: 200,
            max_bins: 255,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// A small, fast configuration for desk-scale corpora and tests.
    pub fn desk() -> Self {
        TrainConfig {
            n_estimators: 300,
            learning_rate: 0.1,
            num_leaves: 31,
            max_depth: 6,
            min_child_samples: 20,
            lambda_l1: 0.0,
            lambda_l2: 1.0,
            feature_fraction: 0.8,
            bagging_fraction: 0.8,
            bagging_freq: 1,
            scale_pos_weight: 1.0,
            early_stopping_patience: 50,
            max_bins: 255,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), GbdtError> {
        let fail = |msg: String| Err(GbdtError::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return fail(format!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if self.num_leaves < 2 {
            return fail(format!("num_leaves must be >= 2, got {}", self.num_leaves));
        }
        if self.max_depth < 1 {
            return fail("max_depth must be >= 1".into());
        }
        if self.min_child_samples < 1 {
            return fail("min_child_samples must be >= 1".into());
        }
        for (name, v) in [
            ("feature_fraction", self.feature_fraction),
            ("bagging_fraction", self.bagging_fraction),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return fail(format!("{name} must be in (0, 1], got {v}"));
            }
        }
        if !(self.lambda_l1 >= 0.0 && self.lambda_l2 >= 0.0) {
            return fail("lambda_l1 and lambda_l2 must be >= 0".into());
        }
        if !(self.scale_pos_weight > 0.0 && self.scale_pos_weight.is_finite()) {
            return fail(format!("scale_pos_weight must be > 0, got {}", self.scale_pos_weight));
        }
        if !(2..=65_535).contains(&self.max_bins) {
            return fail(format!("max_bins must be in 2..=65535, got {}", self.max_bins));
        }
        Ok(())
    }
}
