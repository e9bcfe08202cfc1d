use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Node, Tree};
use super::{GbdtError, TrainConfig};
use crate::util::sigmoid;
use crate::vectorize::SparseMatrix;

pub const MODEL_VERSION: u32 = 1;

/// A trained ensemble. `trees.len() == best_iteration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub config: TrainConfig,
    pub n_features: usize,
    pub base_score: f64,
    pub best_iteration: usize,
    pub best_valid_auc: Option<f64>,
    pub trees: Vec<Tree>,
    /// Total split gain per input column over the kept trees.
    pub feature_gain: Vec<f64>,
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    version: u32,
    #[serde(flatten)]
    model: &'a GbdtModel,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[allow(dead_code)]
    version: u32,
    config: TrainConfig,
    n_features: usize,
    base_score: f64,
    best_iteration: usize,
    best_valid_auc: Option<f64>,
    trees: Vec<Tree>,
    feature_gain: Vec<f64>,
}

impl GbdtModel {
    pub fn learning_rate(&self) -> f64 {
        self.config.learning_rate
    }

    /// Total split gain per column over the kept trees.
    pub fn feature_importance(&self) -> Vec<f64> {
        self.feature_gain.clone()
    }

    pub fn compute_feature_gain(&self) -> Vec<f64> {
        let mut gain = vec![0.0; self.n_features];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split { feature, gain: g, .. } = n {
                    gain[*feature as usize] += g;
                }
            }
        }
        gain
    }

    fn check_width(&self, x: &SparseMatrix) -> Result<(), GbdtError> {
        if x.n_cols() != self.n_features {
            return Err(GbdtError::InvalidInput(format!(
                "model expects {} columns, matrix has {}",
                self.n_features,
                x.n_cols()
            )));
        }
        Ok(())
    }

    /// Raw scores `base + sum(lr * f_t(x))`.
    pub fn predict_raw(&self, x: &SparseMatrix) -> Result<Vec<f64>, GbdtError> {
        self.check_width(x)?;
        let lr = self.learning_rate();
        Ok((0..x.n_rows())
            .into_par_iter()
            .with_min_len(256)
            .map(|r| {
                let (c, v) = x.row(r);
                let mut s = self.base_score;
                for t in &self.trees {
                    s += lr * t.predict_row(c, v);
                }
                s
            })
            .collect())
    }

    pub fn predict_proba(&self, x: &SparseMatrix) -> Result<Vec<f64>, GbdtError> {
        Ok(self.predict_raw(x)?.into_iter().map(sigmoid).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFileRef { version: MODEL_VERSION, model: self })
            .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GbdtError> {
        let probe: VersionProbe =
            serde_json::from_str(text).map_err(|e| GbdtError::Parse(e.to_string()))?;
        match probe.version {
            Some(MODEL_VERSION) => {}
            Some(found) => {
                return Err(GbdtError::IncompatibleVersion { found, expected: MODEL_VERSION })
            }
            None => return Err(GbdtError::Schema("missing version".into())),
        }
        let f: ModelFile =
            serde_json::from_str(text).map_err(|e| GbdtError::Schema(e.to_string()))?;
        let m = GbdtModel {
            config: f.config,
            n_features: f.n_features,
            base_score: f.base_score,
            best_iteration: f.best_iteration,
            best_valid_auc: f.best_valid_auc,
            trees: f.trees,
            feature_gain: f.feature_gain,
        };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<(), GbdtError> {
        if self.trees.len() != self.best_iteration {
            return Err(GbdtError::Schema(format!(
                "{} trees but best_iteration {}",
                self.trees.len(),
                self.best_iteration
            )));
        }
        if self.feature_gain.len() != self.n_features {
            return Err(GbdtError::Schema("feature_gain length differs from n_features".into()));
        }
        if !self.base_score.is_finite() {
            return Err(GbdtError::Schema("base_score is not finite".into()));
        }
        self.config.validate().map_err(|e| GbdtError::Schema(e.to_string()))?;
        for (i, t) in self.trees.iter().enumerate() {
            t.check(self.n_features)
                .map_err(|e| GbdtError::Schema(format!("tree {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GbdtError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| GbdtError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GbdtError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| GbdtError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}
