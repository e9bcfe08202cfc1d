use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gbdt::TrainConfig;

/// Search bounds. Integer ranges are inclusive; the learning rate is sampled
/// on a log scale. Fields not listed here come from the base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub num_leaves: (usize, usize),
    pub max_depth: (usize, usize),
    pub min_child_samples: (usize, usize),
    pub lambda_l1: (f64, f64),
    pub lambda_l2: (f64, f64),
    pub feature_fraction: (f64, f64),
    pub bagging_fraction: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            learning_rate: (0.005, 0.05),
            num_leaves: (31, 256),
            max_depth: (4, 10),
            min_child_samples: (20, 300),
            lambda_l1: (0.0, 5.0),
            lambda_l2: (0.0, 5.0),
            feature_fraction: (0.6, 0.9),
            bagging_fraction: (0.6, 0.9),
        }
    }
}

pub(crate) const DIMS: usize = 8;

/// A config as a point in the sampler's continuous coordinates.
pub(crate) type Point = [f64; DIMS];

impl SearchSpace {
    /// Lower and upper bound of each coordinate.
    pub(crate) fn bounds(&self) -> [(f64, f64); DIMS] {
        let i = |r: (usize, usize)| (r.0 as f64, r.1 as f64);
        [
            (self.learning_rate.0.ln(), self.learning_rate.1.ln()),
            i(self.num_leaves),
            i(self.max_depth),
            i(self.min_child_samples),
            self.lambda_l1,
            self.lambda_l2,
            self.feature_fraction,
            self.bagging_fraction,
        ]
    }

    pub(crate) fn to_point(&self, c: &TrainConfig) -> Point {
        [
            c.learning_rate.ln(),
            c.num_leaves as f64,
            c.max_depth as f64,
            c.min_child_samples as f64,
            c.lambda_l1,
            c.lambda_l2,
            c.feature_fraction,
            c.bagging_fraction,
        ]
    }

    /// Clamp into bounds and round integer coordinates.
    pub(crate) fn to_config(&self, p: &Point, base: &TrainConfig) -> TrainConfig {
        let b = self.bounds();
        let c = |k: usize| p[k].clamp(b[k].0, b[k].1);
        let int = |k: usize| c(k).round() as usize;
        TrainConfig {
            learning_rate: c(0).exp().clamp(self.learning_rate.0, self.learning_rate.1),
            num_leaves: int(1),
            max_depth: int(2),
            min_child_samples: int(3),
            lambda_l1: c(4),
            lambda_l2: c(5),
            feature_fraction: c(6),
            bagging_fraction: c(7),
            ..base.clone()
        }
    }

    pub(crate) fn random_point<R: Rng>(&self, rng: &mut R) -> Point {
        let b = self.bounds();
        let mut p = [0.0; DIMS];
        for k in 0..DIMS {
            p[k] = if b[k].1 > b[k].0 { rng.gen_range(b[k].0..=b[k].1) } else { b[k].0 };
        }
        p
    }

    pub fn sample<R: Rng>(&self, base: &TrainConfig, rng: &mut R) -> TrainConfig {
        self.to_config(&self.random_point(rng), base)
    }

    /// Names and values of tuned fields lying outside the bounds.
    pub fn violations(&self, c: &TrainConfig) -> Vec<String> {
        let mut out = Vec::new();
        let mut f = |name: &str, v: f64, (lo, hi): (f64, f64)| {
            if !(lo..=hi).contains(&v) {
                out.push(format!("{name}={v} outside [{lo}, {hi}]"));
            }
        };
        let i = |r: (usize, usize)| (r.0 as f64, r.1 as f64);
        f("learning_rate", c.learning_rate, self.learning_rate);
        f("num_leaves", c.num_leaves as f64, i(self.num_leaves));
        f("max_depth", c.max_depth as f64, i(self.max_depth));
        f("min_child_samples", c.min_child_samples as f64, i(self.min_child_samples));
        f("lambda_l1", c.lambda_l1, self.lambda_l1);
        f("lambda_l2", c.lambda_l2, self.lambda_l2);
        f("feature_fraction", c.feature_fraction, self.feature_fraction);
        f("bagging_fraction", c.bagging_fraction, self.bagging_fraction);
        out
    }
}
