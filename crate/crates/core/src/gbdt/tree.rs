use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;
use crate::vectorize::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f32,
        /// Local bin index of the threshold, used while training.
        bin: u32,
        gain: f64,
        left: u32,
        right: u32,
        count: u32,
    },
    Leaf { value: f64, count: u32 },
}

/// One regression tree; `nodes[0]` is the root. Leaf values are raw Newton
/// steps; the learning rate is applied by the model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Depth of the deepest leaf; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left as usize).max(go(t, right as usize)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(self, 0)
        }
    }

    pub fn predict_row(&self, cols: &[u32], vals: &[f32]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    let v = match cols.binary_search(feature) {
                        Ok(k) => vals[k],
                        Err(_) => 0.0,
                    };
                    i = if v <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn predict(&self, x: &SparseMatrix, row: usize) -> f64 {
        let (c, v) = x.row(row);
        self.predict_row(c, v)
    }

    pub(crate) fn predict_binned(&self, b: &BinnedMatrix, row: usize) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split { feature, bin, left, right, .. } => {
                    let lb = b.local_bin(row, *feature as usize);
                    i = if lb <= *bin { *left } else { *right } as usize;
                }
            }
        }
    }

    /// Structural checks for loaded trees.
    pub fn check(&self, n_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(format!("node {i} reached twice"));
            }
            seen[i] = true;
            match &self.nodes[i] {
                Node::Leaf { value, .. } => {
                    if !value.is_finite() {
                        return Err(format!("leaf {i} has non-finite value"));
                    }
                }
                Node::Split { feature, left, right, threshold, .. } => {
                    if *feature as usize >= n_features {
                        return Err(format!("node {i} splits on feature {feature} >= {n_features}"));
                    }
                    if threshold.is_nan() {
                        return Err(format!("node {i} has NaN threshold"));
                    }
                    for c in [*left as usize, *right as usize] {
                        if c >= n || c <= i {
                            return Err(format!("node {i} has bad child {c}"));
                        }
                        stack.push(c);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("unreachable nodes".into());
        }
        Ok(())
    }
}
