use rand::seq::index::sample;
use rayon::prelude::*;

use super::binning::BinnedMatrix;
use super::grow::{grow_tree, GrowParams};
use super::{GbdtError, GbdtModel, TrainConfig};
use crate::evalx::roc_auc;
use crate::util::{seeded_rng, sigmoid};
use crate::vectorize::SparseMatrix;

const STREAM_BAGGING: u64 = 1;
const STREAM_FEATURES: u64 = 2;

/// Held-out rows used for early stopping.
#[derive(Debug, Clone, Copy)]
pub struct Validation<'a> {
    pub x: &'a SparseMatrix,
    pub y: &'a [u8],
}

/// First and second derivatives of the weighted logistic loss with respect
/// to the raw score: `g = w (p - y)`, `h = w p (1 - p)`.
pub fn gradients(y: &[u8], w: &[f64], scores: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (0..y.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            let p = sigmoid(scores[i]);
            (w[i] * (p - y[i] as f64), w[i] * (p * (1.0 - p)))
        })
        .unzip()
}

/// Mean weighted negative log-likelihood over raw scores.
pub fn weighted_log_loss(y: &[u8], w: &[f64], scores: &[f64]) -> f64 {
    let total: f64 = (0..y.len())
        .map(|i| {
            // -log sigmoid(s) = softplus(-s), computed stably.
            let s = if y[i] == 1 { -scores[i] } else { scores[i] };
            let softplus = if s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() };
            w[i] * softplus
        })
        .sum();
    total / y.len() as f64
}

fn check_inputs(x: &SparseMatrix, y: &[u8], what: &str) -> Result<(), GbdtError> {
    if x.n_rows() != y.len() {
        return Err(GbdtError::InvalidInput(format!(
            "{what}: {} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if let Some(l) = y.iter().find(|&&v| v > 1) {
        return Err(GbdtError::InvalidInput(format!("{what}: label {l} is not 0 or 1")));
    }
    if x.has_non_finite() {
        return Err(GbdtError::InvalidInput(format!("{what}: matrix contains NaN or infinite values")));
    }
    Ok(())
}

/// Train with weight `scale_pos_weight` on positives and 1 on negatives.
pub fn train(
    x: &SparseMatrix,
    y: &[u8],
    config: &TrainConfig,
    valid: Option<Validation<'_>>,
) -> Result<GbdtModel, GbdtError> {
    let w: Vec<f64> = y
        .iter()
        .map(|&v| if v == 1 { config.scale_pos_weight } else { 1.0 })
        .collect();
    train_weighted(x, y, &w, config, valid)
}

/// Train with explicit per-row weights (`scale_pos_weight` is ignored).
pub fn train_weighted(
    x: &SparseMatrix,
    y: &[u8],
    w: &[f64],
    config: &TrainConfig,
    valid: Option<Validation<'_>>,
) -> Result<GbdtModel, GbdtError> {
    config.validate()?;
    check_inputs(x, y, "training set")?;
    if w.len() != y.len() || w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(GbdtError::InvalidInput("weights must be positive, one per row".into()));
    }
    if let Some(v) = valid {
        check_inputs(v.x, v.y, "validation set")?;
        if v.x.n_cols() != x.n_cols() {
            return Err(GbdtError::InvalidInput(format!(
                "validation set has {} columns, training set {}",
                v.x.n_cols(),
                x.n_cols()
            )));
        }
    }
    let n = y.len();
    let wp: f64 = y.iter().zip(w).filter(|(&t, _)| t == 1).map(|(_, &wi)| wi).sum();
    let wn: f64 = y.iter().zip(w).filter(|(&t, _)| t == 0).map(|(_, &wi)| wi).sum();
    if wp == 0.0 || wn == 0.0 {
        return Err(GbdtError::SingleClass);
    }
    let base_score = (wp / wn).ln();

    let binned = BinnedMatrix::build(x, config.max_bins);
    let params = GrowParams {
        num_leaves: config.num_leaves,
        max_depth: config.max_depth,
        min_child_samples: config.min_child_samples,
        lambda_l1: config.lambda_l1,
        lambda_l2: config.lambda_l2,
    };
    let n_features = x.n_cols();
    let bagging = config.bagging_freq > 0 && config.bagging_fraction < 1.0;
    let n_bag = ((config.bagging_fraction * n as f64).floor() as usize).clamp(1, n);
    let n_feat = ((config.feature_fraction * n_features as f64).round() as usize).clamp(1, n_features.max(1));
    let mut rng_bag = seeded_rng(config.seed, STREAM_BAGGING);
    let mut rng_feat = seeded_rng(config.seed, STREAM_FEATURES);

    let all_rows: Vec<u32> = (0..n as u32).collect();
    let all_features: Vec<usize> = (0..n_features).collect();
    let mut bag = all_rows.clone();
    let mut scores = vec![base_score; n];
    let mut vscores = valid.map(|v| vec![base_score; v.y.len()]);
    let mut trees = Vec::new();
    let mut best_auc = f64::NEG_INFINITY;
    let mut best_iter = 0usize;
    let mut valid_auc = Vec::new();

    for t in 0..config.n_estimators {
        let (g, h) = gradients(y, w, &scores);
        if bagging && t % config.bagging_freq == 0 {
            let mut s: Vec<u32> = sample(&mut rng_bag, n, n_bag).into_iter().map(|i| i as u32).collect();
            s.sort_unstable();
            bag = s;
        }
        let features: Vec<usize> = if n_feat < n_features {
            let mut s = sample(&mut rng_feat, n_features, n_feat).into_vec();
            s.sort_unstable();
            s
        } else {
            all_features.clone()
        };
        let tree = grow_tree(&binned, &bag, &g, &h, &features, &params);
        let lr = config.learning_rate;
        scores
            .par_iter_mut()
            .enumerate()
            .with_min_len(1024)
            .for_each(|(r, s)| *s += lr * tree.predict_binned(&binned, r));
        trees.push(tree);

        if let (Some(v), Some(vs)) = (valid, vscores.as_mut()) {
            let tree = trees.last().unwrap();
            vs.par_iter_mut()
                .enumerate()
                .with_min_len(1024)
                .for_each(|(r, s)| *s += lr * tree.predict(v.x, r));
            let auc = roc_auc(v.y, vs).unwrap_or(0.5);
            valid_auc.push(auc);
            if auc > best_auc {
                best_auc = auc;
                best_iter = t + 1;
            }
            if config.early_stopping_patience > 0 && t + 1 - best_iter >= config.early_stopping_patience {
                log::debug!("early stop at round {} (best {best_iter}, auc {best_auc:.5})", t + 1);
                break;
            }
        }
    }

    let best_iteration = if valid.is_some() { best_iter.max(1).min(trees.len()) } else { trees.len() };
    trees.truncate(best_iteration);
    let mut model = GbdtModel {
        config: config.clone(),
        n_features,
        base_score,
        best_iteration,
        best_valid_auc: valid.map(|_| best_auc),
        trees,
        feature_gain: Vec::new(),
    };
    model.feature_gain = model.compute_feature_gain();
    Ok(model)
}
