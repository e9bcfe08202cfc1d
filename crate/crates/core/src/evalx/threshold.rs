use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{confusion_at, evaluate, roc_auc, Confusion, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMetric {
    F1,
    BalancedAccuracy,
    Youden,
}

impl ThresholdMetric {
    pub fn score(self, c: &Confusion) -> f64 {
        match self {
            ThresholdMetric::F1 => c.f1(),
            ThresholdMetric::BalancedAccuracy => c.balanced_accuracy(),
            ThresholdMetric::Youden => c.recall() + c.specificity() - 1.0,
        }
    }
}

impl FromStr for ThresholdMetric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f1" => Ok(ThresholdMetric::F1),
            "balanced_accuracy" => Ok(ThresholdMetric::BalancedAccuracy),
            "youden" => Ok(ThresholdMetric::Youden),
            _ => Err(format!("unknown metric {s:?} (expected f1, balanced_accuracy or youden)")),
        }
    }
}

/// Threshold maximizing `metric`, searched over every distinct probability
/// plus 0 and 1. Ties go to the smallest threshold.
pub fn optimize_threshold(y: &[u8], probs: &[f64], metric: ThresholdMetric) -> (f64, EvalReport) {
    let (t, _) = best_threshold(y, probs, metric);
    (t, evaluate(y, probs, t))
}

/// Threshold and metric value behind [`optimize_threshold`].
pub fn best_threshold(y: &[u8], probs: &[f64], metric: ThresholdMetric) -> (f64, f64) {
    assert_eq!(y.len(), probs.len(), "labels and scores differ in length");
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let total_pos = y.iter().filter(|&&v| v == 1).count() as u64;
    let total_neg = y.len() as u64 - total_pos;

    let mut cands: Vec<f64> = probs.to_vec();
    cands.push(0.0);
    cands.push(1.0);
    cands.sort_by(f64::total_cmp);
    cands.dedup();

    // Sweep ascending; rows below the candidate are predicted negative.
    let (mut below_pos, mut below_neg, mut j) = (0u64, 0u64, 0usize);
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for &t in &cands {
        while j < order.len() && probs[order[j]] < t {
            if y[order[j]] == 1 {
                below_pos += 1;
            } else {
                below_neg += 1;
            }
            j += 1;
        }
        let c = Confusion {
            tn: below_neg,
            fp: total_neg - below_neg,
            fn_: below_pos,
            tp: total_pos - below_pos,
        };
        let v = metric.score(&c);
        if v > best.1 {
            best = (t, v);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub balanced_accuracy: f64,
    pub auc: Option<f64>,
}

pub fn threshold_sweep(y: &[u8], probs: &[f64], thresholds: &[f64]) -> Vec<SweepRow> {
    let auc = roc_auc(y, probs);
    thresholds
        .iter()
        .map(|&t| {
            let c = confusion_at(y, probs, t);
            SweepRow {
                threshold: t,
                confusion: c,
                precision: c.precision(),
                recall: c.recall(),
                f1: c.f1(),
                specificity: c.specificity(),
                balanced_accuracy: c.balanced_accuracy(),
                auc,
            }
        })
        .collect()
}

/// Evenly spaced thresholds `0, step, 2 step, ..., 1`.
pub fn threshold_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("threshold,tn,fp,fn,tp,precision,recall,f1,specificity,balanced_accuracy,auc\n");
    for r in rows {
        let c = r.confusion;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.threshold,
            c.tn,
            c.fp,
            c.fn_,
            c.tp,
            r.precision,
            r.recall,
            r.f1,
            r.specificity,
            r.balanced_accuracy,
            r.auc.map_or(String::new(), |a| a.to_string()),
        ));
    }
    s
}
