//! Analysis harness: importance aggregation, category ablation, top-K
//! feature selection and training-dynamics summaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalx::{cv_train, CvResult, EvalError, FoldPlan};
use crate::gbdt::{GbdtModel, TrainConfig};
use crate::util::{mean, std_dev};
use crate::vectorize::{Category, FeatureRegistry, SparseMatrix};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    InvalidArgument(String),
    #[error("registry mismatch: {0}")]
    RegistryMismatch(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub column: usize,
    pub name: String,
    pub category: Category,
    pub mean_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryImportance {
    pub category: Category,
    pub n_features: usize,
    pub total_gain: f64,
    /// Share of the grand total, in percent.
    pub percent: f64,
    /// Population std of the share across models.
    pub percent_std: f64,
    pub average_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub n_models: usize,
    pub features: Vec<FeatureImportance>,
    pub categories: Vec<CategoryImportance>,
}

fn category_totals(gain: &[f64], registry: &FeatureRegistry) -> Vec<(Category, usize, f64)> {
    registry
        .categories()
        .into_iter()
        .map(|c| {
            let cols = registry.columns_of(c);
            let total = cols.iter().map(|&i| gain[i]).sum();
            (c, cols.len(), total)
        })
        .collect()
}

fn percents(totals: &[(Category, usize, f64)]) -> Vec<f64> {
    let grand: f64 = totals.iter().map(|t| t.2).sum();
    totals
        .iter()
        .map(|t| if grand > 0.0 { 100.0 * t.2 / grand } else { 0.0 })
        .collect()
}

/// Mean split gain per column across models, rolled up by category.
pub fn aggregate_importance(
    models: &[GbdtModel],
    registry: &FeatureRegistry,
) -> Result<ImportanceReport, ExperimentError> {
    if models.is_empty() {
        return Err(ExperimentError::InvalidArgument("no models".into()));
    }
    for (i, m) in models.iter().enumerate() {
        if m.n_features != registry.len() || m.feature_gain.len() != registry.len() {
            return Err(ExperimentError::RegistryMismatch(format!(
                "model {i} has {} features, registry {}",
                m.n_features,
                registry.len()
            )));
        }
    }
    let k = models.len() as f64;
    let mut gain = vec![0.0; registry.len()];
    for m in models {
        for (g, v) in gain.iter_mut().zip(&m.feature_gain) {
            *g += v;
        }
    }
    gain.iter_mut().for_each(|g| *g /= k);

    let per_model: Vec<Vec<f64>> = models
        .iter()
        .map(|m| percents(&category_totals(&m.feature_gain, registry)))
        .collect();
    let totals = category_totals(&gain, registry);
    let pct = percents(&totals);
    let categories = totals
        .iter()
        .enumerate()
        .map(|(j, &(category, n_features, total_gain))| {
            let shares: Vec<f64> = per_model.iter().map(|p| p[j]).collect();
            CategoryImportance {
                category,
                n_features,
                total_gain,
                percent: pct[j],
                percent_std: std_dev(&shares),
                average_gain: total_gain / n_features as f64,
            }
        })
        .collect();
    let features = registry
        .entries
        .iter()
        .map(|e| FeatureImportance {
            column: e.column,
            name: e.name.clone(),
            category: e.category,
            mean_gain: gain[e.column],
        })
        .collect();
    Ok(ImportanceReport {
        n_models: models.len(),
        features,
        categories,
    })
}

/// Columns ordered by gain descending, ties by column index.
pub fn rank_features(gain: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gain.len()).collect();
    order.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]).then(a.cmp(&b)));
    order
}

/// Top `k` columns of `ranking`, returned in original column order.
pub fn select_topk(ranking: &[usize], k: usize) -> Result<Vec<usize>, ExperimentError> {
    if k == 0 || k > ranking.len() {
        return Err(ExperimentError::InvalidArgument(format!(
            "k must be in 1..={}, got {k}",
            ranking.len()
        )));
    }
    let mut cols = ranking[..k].to_vec();
    cols.sort_unstable();
    Ok(cols)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub configuration: String,
    pub dropped: Option<Category>,
    pub n_features: usize,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub oof_auc: f64,
    /// `(baseline - ablated) / baseline * 100`; positive means removing
    /// the category hurt.
    pub delta_pct: f64,
}

fn summarize(configuration: String, dropped: Option<Category>, n_features: usize, cv: &CvResult, baseline: f64) -> AblationRow {
    AblationRow {
        configuration,
        dropped,
        n_features,
        mean_auc: cv.mean_auc,
        std_auc: cv.std_auc,
        oof_auc: cv.oof_auc,
        delta_pct: (baseline - cv.mean_auc) / baseline * 100.0,
    }
}

/// Baseline on all columns, then one run per dropped category, all on the
/// same folds and config.
pub fn run_ablation(
    x: &SparseMatrix,
    y: &[u8],
    registry: &FeatureRegistry,
    drop: &[Category],
    config: &TrainConfig,
    plan: &FoldPlan,
) -> Result<Vec<AblationRow>, ExperimentError> {
    if registry.len() != x.n_cols() {
        return Err(ExperimentError::RegistryMismatch(format!(
            "registry has {} entries for {} columns",
            registry.len(),
            x.n_cols()
        )));
    }
    for c in drop {
        if registry.width(*c) == 0 {
            return Err(ExperimentError::InvalidArgument(format!("category {c} is not in the registry")));
        }
        if registry.width(*c) == registry.len() {
            return Err(ExperimentError::InvalidArgument(format!(
                "dropping {c} would leave no columns"
            )));
        }
    }
    let base = cv_train(x, y, config, plan)?;
    let mut rows = vec![summarize("full".into(), None, x.n_cols(), &base, base.mean_auc)];
    for &c in drop {
        let keep: Vec<usize> = (0..registry.len())
            .filter(|&i| registry.entries[i].category != c)
            .collect();
        let xs = x.select_columns(&keep).map_err(|e| ExperimentError::InvalidArgument(e.to_string()))?;
        let cv = cv_train(&xs, y, config, plan)?;
        rows.push(summarize(format!("w/o {c}"), Some(c), keep.len(), &cv, base.mean_auc));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKRow {
    pub k: usize,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub oof_auc: f64,
    pub pct_of_baseline: f64,
}

#[derive(Debug, Clone)]
pub struct TopKOutcome {
    pub baseline_mean_auc: f64,
    pub ranking: Vec<usize>,
    pub rows: Vec<TopKRow>,
    /// Out-of-fold predictions per k, same order as `rows`.
    pub runs: Vec<CvResult>,
}

/// Rank columns by the baseline's fold-averaged gain and retrain on the top
/// `k` for each `k`, reusing the baseline's folds.
pub fn topk_experiment(
    x: &SparseMatrix,
    y: &[u8],
    ks: &[usize],
    config: &TrainConfig,
    plan: &FoldPlan,
    baseline: &CvResult,
) -> Result<TopKOutcome, ExperimentError> {
    let n = x.n_cols();
    if let Some(m) = baseline.models.iter().find(|m| m.n_features != n) {
        return Err(ExperimentError::RegistryMismatch(format!(
            "baseline model has {} features, matrix {n}",
            m.n_features
        )));
    }
    let mut gain = vec![0.0; n];
    for m in &baseline.models {
        for (g, v) in gain.iter_mut().zip(&m.feature_gain) {
            *g += v;
        }
    }
    let kf = baseline.models.len() as f64;
    gain.iter_mut().for_each(|g| *g /= kf);
    let ranking = rank_features(&gain);
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &k in ks {
        let cols = select_topk(&ranking, k)?;
        let xs = x.select_columns(&cols).map_err(|e| ExperimentError::InvalidArgument(e.to_string()))?;
        let cv = cv_train(&xs, y, config, plan)?;
        rows.push(TopKRow {
            k,
            mean_auc: cv.mean_auc,
            std_auc: cv.std_auc,
            oof_auc: cv.oof_auc,
            pct_of_baseline: 100.0 * cv.mean_auc / baseline.mean_auc,
        });
        runs.push(cv);
    }
    Ok(TopKOutcome {
        baseline_mean_auc: baseline.mean_auc,
        ranking,
        rows,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub best_iterations: Vec<usize>,
    pub mean_iterations: f64,
    /// Population standard deviation.
    pub std_iterations: f64,
    pub min_iterations: usize,
    pub max_iterations: usize,
    pub per_fold_auc: Vec<f64>,
    pub fold_auc_min: f64,
    pub fold_auc_max: f64,
}

pub fn training_dynamics(best_iterations: &[usize], per_fold_auc: &[f64]) -> DynamicsReport {
    let it: Vec<f64> = best_iterations.iter().map(|&v| v as f64).collect();
    let fmin = per_fold_auc.iter().copied().fold(f64::INFINITY, f64::min);
    let fmax = per_fold_auc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DynamicsReport {
        best_iterations: best_iterations.to_vec(),
        mean_iterations: mean(&it),
        std_iterations: std_dev(&it),
        min_iterations: best_iterations.iter().copied().min().unwrap_or(0),
        max_iterations: best_iterations.iter().copied().max().unwrap_or(0),
        per_fold_auc: per_fold_auc.to_vec(),
        fold_auc_min: fmin,
        fold_auc_max: fmax,
    }
}

pub fn dynamics_of(models: &[GbdtModel], per_fold_auc: &[f64]) -> DynamicsReport {
    let it: Vec<usize> = models.iter().map(|m| m.best_iteration).collect();
    training_dynamics(&it, per_fold_auc)
}

pub fn ablation_markdown(rows: &[AblationRow]) -> String {
    let mut s = String::from("| Configuration | Features | Mean AUC | Std | OOF AUC | Δ% |\n|---|---:|---:|---:|---:|---:|\n");
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:+.2}% |\n",
            r.configuration, r.n_features, r.mean_auc, r.std_auc, r.oof_auc, r.delta_pct
        ));
    }
    s
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("configuration,n_features,mean_auc,std_auc,oof_auc,delta_pct\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.configuration, r.n_features, r.mean_auc, r.std_auc, r.oof_auc, r.delta_pct
        ));
    }
    s
}

pub fn topk_markdown(rows: &[TopKRow]) -> String {
    let mut s = String::from("| K | Mean AUC | Std | OOF AUC | % of baseline |\n|---:|---:|---:|---:|---:|\n");
    for r in rows {
        s.push_str(&format!(
            "| {} | {:.4} | {:.4} | {:.4} | {:.2}% |\n",
            r.k, r.mean_auc, r.std_auc, r.oof_auc, r.pct_of_baseline
        ));
    }
    s
}

pub fn topk_csv(rows: &[TopKRow]) -> String {
    let mut s = String::from("k,mean_auc,std_auc,oof_auc,pct_of_baseline\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.k, r.mean_auc, r.std_auc, r.oof_auc, r.pct_of_baseline));
    }
    s
}

pub fn importance_markdown(report: &ImportanceReport) -> String {
    let mut s = String::from("| Category | Features | Total gain | % | Avg gain |\n|---|---:|---:|---:|---:|\n");
    for c in &report.categories {
        s.push_str(&format!(
            "| {} | {} | {:.2} | {:.2} | {:.4} |\n",
            c.category, c.n_features, c.total_gain, c.percent, c.average_gain
        ));
    }
    s
}

pub fn importance_csv(report: &ImportanceReport) -> String {
    let mut s = String::from("category,n_features,total_gain,percent,percent_std,average_gain\n");
    for c in &report.categories {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.category, c.n_features, c.total_gain, c.percent, c.percent_std, c.average_gain
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::{Node, Tree};
    use crate::vectorize::RegistryEntry;
    use proptest::prelude::*;

    fn registry(cats: &[Category]) -> FeatureRegistry {
        FeatureRegistry {
            entries: cats
                .iter()
                .enumerate()
                .map(|(i, &c)| RegistryEntry { column: i, name: format!("f{i}"), category: c })
                .collect(),
        }
    }

    fn model_with_gain(gain: Vec<f64>) -> GbdtModel {
        GbdtModel {
            config: TrainConfig::default(),
            n_features: gain.len(),
            base_score: 0.0,
            best_iteration: 1,
            best_valid_auc: None,
            trees: vec![Tree { nodes: vec![Node::Leaf { value: 0.0, count: 1 }] }],
            feature_gain: gain,
        }
    }

    #[test]
    fn single_word_split_is_all_word() {
        let reg = registry(&[Category::Medical, Category::Word]);
        let r = aggregate_importance(&[model_with_gain(vec![0.0, 3.5])], &reg).unwrap();
        assert_eq!(r.categories[0].percent, 0.0);
        assert_eq!(r.categories[1].percent, 100.0);
        assert_eq!(r.categories[1].average_gain, 3.5);
    }

    #[test]
    fn aggregate_is_the_mean() {
        let reg = registry(&[Category::Word, Category::Char, Category::Char]);
        let v = vec![1.0, 2.0, 4.0];
        let w = vec![3.0, 0.0, 1.0];
        let r = aggregate_importance(&[model_with_gain(v.clone()), model_with_gain(w.clone())], &reg).unwrap();
        for i in 0..3 {
            assert_eq!(r.features[i].mean_gain, (v[i] + w[i]) / 2.0);
        }
        assert_eq!(r.categories[1].average_gain, (1.0 + 2.5) / 2.0);
        assert!(aggregate_importance(&[model_with_gain(vec![1.0])], &reg).is_err());
        assert!(aggregate_importance(&[], &reg).is_err());
    }

    #[test]
    fn iteration_summary() {
        let d = training_dynamics(&[2114, 2500, 2682, 2800, 3310], &[0.869, 0.88, 0.894]);
        assert!((d.mean_iterations - 2681.2).abs() < 1e-9);
        assert_eq!((d.min_iterations, d.max_iterations), (2114, 3310));
        assert_eq!((d.fold_auc_min, d.fold_auc_max), (0.869, 0.894));
        let same = training_dynamics(&[7, 7, 7], &[0.5; 3]);
        assert_eq!(same.std_iterations, 0.0);
    }

    #[test]
    fn topk_bounds() {
        let r = rank_features(&[1.0, 3.0, 3.0, 0.0]);
        assert_eq!(r, vec![1, 2, 0, 3]);
        assert_eq!(select_topk(&r, 2).unwrap(), vec![1, 2]);
        assert!(select_topk(&r, 0).is_err());
        assert!(select_topk(&r, 5).is_err());
    }

    #[test]
    fn tables_render() {
        let rows = vec![AblationRow {
            configuration: "w/o embedding".into(),
            dropped: Some(Category::Embedding),
            n_features: 3065,
            mean_auc: 0.8584,
            std_auc: 0.01,
            oof_auc: 0.85,
            delta_pct: 2.39,
        }];
        assert!(ablation_markdown(&rows).contains("| w/o embedding | 3065 | 0.8584 | 0.0100 | 0.8500 | +2.39% |"));
        assert_eq!(ablation_csv(&rows).lines().count(), 2);
    }

    proptest! {
        #[test]
        fn category_percents_sum_to_100(gains in prop::collection::vec(0.0f64..100.0, 5), cats in prop::collection::vec(0usize..5, 5)) {
            prop_assume!(gains.iter().sum::<f64>() > 0.0);
            let mut cs: Vec<Category> = cats.iter().map(|&i| Category::ALL[i]).collect();
            cs.sort();
            let r = aggregate_importance(&[model_with_gain(gains)], &registry(&cs)).unwrap();
            let total: f64 = r.categories.iter().map(|c| c.percent).sum();
            prop_assert!((total - 100.0).abs() <= 1e-9);
        }

        #[test]
        fn topk_sets_are_nested(gains in prop::collection::vec(0.0f64..10.0, 1..40), a in 1usize..40, b in 1usize..40) {
            let n = gains.len();
            let (lo, hi) = (a.min(b).min(n), a.max(b).min(n));
            let r = rank_features(&gains);
            let small = select_topk(&r, lo).unwrap();
            let big = select_topk(&r, hi).unwrap();
            prop_assert!(small.iter().all(|c| big.contains(c)));
        }
    }
}
