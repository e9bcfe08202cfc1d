//! Random and tree-structured Parzen estimator samplers.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::space::{Point, SearchSpace, DIMS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Tpe,
    Random,
}

impl FromStr for SamplerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tpe" => Ok(SamplerKind::Tpe),
            "random" => Ok(SamplerKind::Random),
            _ => Err(format!("unknown sampler {s:?} (expected tpe or random)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpeSettings {
    /// Fraction of completed trials treated as good.
    pub gamma: f64,
    /// Trials sampled uniformly before the density model takes over.
    pub n_startup: usize,
    pub n_candidates: usize,
}

impl Default for TpeSettings {
    fn default() -> Self {
        TpeSettings {
            gamma: 0.25,
            n_startup: 10,
            n_candidates: 24,
        }
    }
}

/// One-dimensional Parzen estimator: Gaussian kernels at the observations
/// plus a uniform prior component, truncated to the bounds.
struct Parzen {
    centers: Vec<f64>,
    sigma: f64,
    lo: f64,
    hi: f64,
}

impl Parzen {
    fn new(obs: Vec<f64>, lo: f64, hi: f64) -> Self {
        let range = (hi - lo).max(1e-12);
        let n = obs.len().max(1) as f64;
        let sigma = (range * 0.25 * n.powf(-0.2)).max(range * 0.02);
        Parzen { centers: obs, sigma, lo, hi }
    }

    fn weight(&self) -> f64 {
        1.0 / (self.centers.len() + 1) as f64
    }

    fn density(&self, x: f64) -> f64 {
        let range = (self.hi - self.lo).max(1e-12);
        let w = self.weight();
        let mut d = w / range;
        for &c in &self.centers {
            let z = (x - c) / self.sigma;
            let mass = normal_cdf((self.hi - c) / self.sigma) - normal_cdf((self.lo - c) / self.sigma);
            d += w * (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt() * mass.max(1e-12));
        }
        d
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let k = rng.gen_range(0..=self.centers.len());
        if k == self.centers.len() || self.hi <= self.lo {
            return if self.hi > self.lo { rng.gen_range(self.lo..=self.hi) } else { self.lo };
        }
        let normal = Normal::new(self.centers[k], self.sigma).expect("positive sigma");
        for _ in 0..32 {
            let v = normal.sample(rng);
            if (self.lo..=self.hi).contains(&v) {
                return v;
            }
        }
        self.centers[k].clamp(self.lo, self.hi)
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Next point given completed `(point, objective)` pairs (higher is better).
pub(crate) fn propose<R: Rng>(
    kind: SamplerKind,
    settings: &TpeSettings,
    space: &SearchSpace,
    done: &[(Point, f64)],
    rng: &mut R,
) -> Point {
    if kind == SamplerKind::Random || done.len() < settings.n_startup {
        return space.random_point(rng);
    }
    let mut order: Vec<usize> = (0..done.len()).collect();
    order.sort_by(|&a, &b| done[b].1.total_cmp(&done[a].1).then(a.cmp(&b)));
    let n_good = ((settings.gamma * done.len() as f64).ceil() as usize).clamp(1, done.len() - 1);
    let bounds = space.bounds();
    let build = |idx: &[usize]| -> Vec<Parzen> {
        (0..DIMS)
            .map(|k| Parzen::new(idx.iter().map(|&i| done[i].0[k]).collect(), bounds[k].0, bounds[k].1))
            .collect()
    };
    let good = build(&order[..n_good]);
    let bad = build(&order[n_good..]);

    let mut best: Option<(Point, f64)> = None;
    for _ in 0..settings.n_candidates.max(1) {
        let mut p = [0.0; DIMS];
        let mut score = 0.0;
        for k in 0..DIMS {
            p[k] = good[k].sample(rng);
            score += good[k].density(p[k]).ln() - bad[k].density(p[k]).ln();
        }
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((p, score));
        }
    }
    best.unwrap().0
}
