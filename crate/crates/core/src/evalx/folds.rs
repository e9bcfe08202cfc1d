use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::util::seeded_rng;

/// Stratified assignment of rows to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index of each row.
    pub fold_of: Vec<usize>,
}

/// Shuffle each class with the seed, then deal positives and then negatives
/// round-robin with one shared counter, so fold sizes differ by at most one
/// both overall and within each class.
pub fn make_folds(y: &[u8], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidArgument(format!("folds must be >= 2, got {k}")));
    }
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
    if pos.len() + neg.len() != y.len() {
        return Err(EvalError::InvalidArgument("labels must be 0 or 1".into()));
    }
    if pos.len() < k || neg.len() < k {
        return Err(EvalError::InvalidArgument(format!(
            "{k} folds need at least {k} rows of each class ({} positive, {} negative)",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = seeded_rng(seed, 0);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold_of = vec![0; y.len()];
    for (counter, &i) in pos.iter().chain(&neg).enumerate() {
        fold_of[i] = counter % k;
    }
    Ok(FoldPlan { k, seed, fold_of })
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.fold_of.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn validate(&self, n_rows: usize) -> Result<(), EvalError> {
        if self.fold_of.len() != n_rows {
            return Err(EvalError::InvalidArgument(format!(
                "fold plan covers {} rows, data has {n_rows}",
                self.fold_of.len()
            )));
        }
        if self.k < 2 || self.fold_of.iter().any(|&f| f >= self.k) {
            return Err(EvalError::InvalidArgument("fold plan has out-of-range folds".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: usize, n_pos: usize) -> Vec<u8> {
        (0..n).map(|i| (i < n_pos) as u8).collect()
    }

    #[test]
    fn full_scale_class_balance() {
        let y = labels(35_794, 1_637);
        let plan = make_folds(&y, 5, 42).unwrap();
        for f in 0..5 {
            let test = plan.test_indices(f);
            let p = test.iter().filter(|&&i| y[i] == 1).count();
            assert!(p == 327 || p == 328, "fold {f} has {p} positives");
            assert!(test.len() == 7158 || test.len() == 7159);
        }
    }

    #[test]
    fn rejects_degenerate_requests() {
        let y = labels(10, 3);
        assert!(make_folds(&y, 1, 0).is_err());
        assert!(make_folds(&y, 4, 0).is_err());
        assert!(make_folds(&[0, 1, 2], 2, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(n in 20usize..300, rate in 0.1f64..0.9, k in 2usize..6, seed in any::<u64>()) {
            let n_pos = ((n as f64 * rate) as usize).clamp(k, n - k);
            let y = labels(n, n_pos);
            let plan = make_folds(&y, k, seed).unwrap();
            prop_assert_eq!(&plan, &make_folds(&y, k, seed).unwrap());
            let mut seen = vec![0; n];
            let mut sizes = vec![];
            let mut pos = vec![];
            for f in 0..k {
                let t = plan.test_indices(f);
                for &i in &t { seen[i] += 1; }
                pos.push(t.iter().filter(|&&i| y[i] == 1).count());
                sizes.push(t.len());
                prop_assert_eq!(plan.train_indices(f).len() + t.len(), n);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert!(pos.iter().max().unwrap() - pos.iter().min().unwrap() <= 1);
        }
    }
}
