use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{roc_auc, EvalError, FoldPlan};
use crate::gbdt::{train, GbdtModel, TrainConfig, Validation};
use crate::util::{mean, std_dev};
use crate::vectorize::SparseMatrix;

/// Out-of-fold probability for every row, with its fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofPredictions {
    pub probs: Vec<f64>,
    pub fold_of: Vec<usize>,
}

impl OofPredictions {
    /// `row,fold,label,prob`
    pub fn to_csv(&self, ids: Option<&[String]>, y: &[u8]) -> String {
        let mut s = String::from(if ids.is_some() { "id,fold,label,prob\n" } else { "row,fold,label,prob\n" });
        for i in 0..self.probs.len() {
            let key = ids.map_or_else(|| i.to_string(), |ids| ids[i].clone());
            s.push_str(&format!("{key},{},{},{}\n", self.fold_of[i], y[i], self.probs[i]));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub models: Vec<GbdtModel>,
    pub oof: OofPredictions,
    pub per_fold_auc: Vec<f64>,
    pub mean_auc: f64,
    /// Population standard deviation of the fold AUCs.
    pub std_auc: f64,
    pub oof_auc: f64,
}

fn fold_auc(y: &[u8], probs: &[f64], rows: &[usize]) -> f64 {
    let yy: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
    let pp: Vec<f64> = rows.iter().map(|&i| probs[i]).collect();
    roc_auc(&yy, &pp).unwrap_or(f64::NAN)
}

/// Train one model per fold on the other folds, early-stopping on the held
/// out fold, and collect out-of-fold probabilities.
/// Model, held-out rows and their probabilities.
type FoldFit = (GbdtModel, Vec<usize>, Vec<f64>);

pub fn cv_train(
    x: &SparseMatrix,
    y: &[u8],
    config: &TrainConfig,
    plan: &FoldPlan,
) -> Result<CvResult, EvalError> {
    plan.validate(x.n_rows())?;
    if y.len() != x.n_rows() {
        return Err(EvalError::InvalidArgument(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    let fits: Vec<Result<FoldFit, EvalError>> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let tr = plan.train_indices(f);
            let te = plan.test_indices(f);
            let xtr = x.select_rows(&tr);
            let ytr: Vec<u8> = tr.iter().map(|&i| y[i]).collect();
            let xte = x.select_rows(&te);
            let yte: Vec<u8> = te.iter().map(|&i| y[i]).collect();
            let fold_err = |source| EvalError::Fold { fold: f, source };
            let model = train(&xtr, &ytr, config, Some(Validation { x: &xte, y: &yte })).map_err(fold_err)?;
            let p = model.predict_proba(&xte).map_err(fold_err)?;
            log::info!("fold {f}: {} trees", model.best_iteration);
            Ok((model, te, p))
        })
        .collect();
    let mut probs = vec![f64::NAN; x.n_rows()];
    let mut models = Vec::with_capacity(plan.k);
    let mut per_fold_auc = Vec::with_capacity(plan.k);
    for fit in fits {
        let (model, te, p) = fit?;
        for (&i, &pi) in te.iter().zip(&p) {
            probs[i] = pi;
        }
        per_fold_auc.push(fold_auc(y, &probs, &te));
        models.push(model);
    }
    let oof_auc = roc_auc(y, &probs).unwrap_or(f64::NAN);
    Ok(CvResult {
        models,
        mean_auc: mean(&per_fold_auc),
        std_auc: std_dev(&per_fold_auc),
        per_fold_auc,
        oof_auc,
        oof: OofPredictions {
            probs,
            fold_of: plan.fold_of.clone(),
        },
    })
}

/// Mean probability over the fold models, computed as offsets from the
/// first model so that identical models reproduce it exactly.
pub fn ensemble_predict(models: &[GbdtModel], x: &SparseMatrix) -> Result<Vec<f64>, EvalError> {
    let Some(first) = models.first() else {
        return Err(EvalError::InvalidArgument("no models to ensemble".into()));
    };
    let base = first.predict_proba(x)?;
    let mut offset = vec![0.0; x.n_rows()];
    for m in &models[1..] {
        for ((o, p), b) in offset.iter_mut().zip(m.predict_proba(x)?).zip(&base) {
            *o += p - b;
        }
    }
    let k = models.len() as f64;
    Ok(base.iter().zip(&offset).map(|(b, o)| b + o / k).collect())
}
