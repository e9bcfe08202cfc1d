use serde::{Deserialize, Serialize};

/// ROC AUC by the Mann-Whitney statistic with average ranks for ties.
/// Rank sums are kept as doubled integers, so the result is exact up to the
/// final division. `None` when either class is absent.
pub fn roc_auc(y: &[u8], scores: &[f64]) -> Option<f64> {
    assert_eq!(y.len(), scores.len(), "labels and scores differ in length");
    let n_pos = y.iter().filter(|&&v| v == 1).count() as u128;
    let n_neg = y.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        // Ranks i+1..=j average to (i + 1 + j) / 2.
        let doubled = (i + 1 + j) as u128;
        let pos_in_group = idx[i..j].iter().filter(|&&k| y[k] == 1).count() as u128;
        rank_sum2 += doubled * pos_in_group;
        i = j;
    }
    let u2 = rank_sum2 - n_pos * (n_pos + 1);
    Some(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }
    pub fn balanced_accuracy(&self) -> f64 {
        (self.recall() + self.specificity()) / 2.0
    }
}

/// Zero when the denominator is zero.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Predict positive when `p >= threshold`.
pub fn confusion_at(y: &[u8], probs: &[f64], threshold: f64) -> Confusion {
    assert_eq!(y.len(), probs.len(), "labels and scores differ in length");
    let mut c = Confusion { tn: 0, fp: 0, fn_: 0, tp: 0 };
    for (&t, &p) in y.iter().zip(probs) {
        match (t == 1, p >= threshold) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// Metrics at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub roc_auc: Option<f64>,
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub n: usize,
    pub n_positive: usize,
}

pub fn evaluate(y: &[u8], probs: &[f64], threshold: f64) -> EvalReport {
    let c = confusion_at(y, probs, threshold);
    EvalReport {
        threshold,
        roc_auc: roc_auc(y, probs),
        confusion: c,
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        specificity: c.specificity(),
        accuracy: c.accuracy(),
        balanced_accuracy: c.balanced_accuracy(),
        n: y.len(),
        n_positive: y.iter().filter(|&&v| v == 1).count(),
    }
}
