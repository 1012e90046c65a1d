//! Inverse-distance weighting and k-nearest-neighbour averaging.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_training;
use crate::dataset::{distance, Features};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdwConfig {
    pub power: f64,
    /// Distances at or below this snap to the nearest training target.
    pub epsilon: f64,
}

impl Default for IdwConfig {
    fn default() -> Self {
        Self {
            power: 2.0,
            epsilon: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeighting {
    Uniform,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    pub weighting: KnnWeighting,
    pub epsilon: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 5,
            weighting: KnnWeighting::InverseDistance,
            epsilon: 1e-12,
        }
    }
}

fn idw_one(train: &Features, targets: &[f64], q: &[f64], cfg: &IdwConfig) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut nearest = (f64::INFINITY, 0);
    for (i, x) in train.rows().enumerate() {
        let d = distance(x, q);
        if d < nearest.0 {
            nearest = (d, i);
        }
        let w = d.powf(-cfg.power);
        num += w * targets[i];
        den += w;
    }
    if nearest.0 <= cfg.epsilon || !den.is_finite() {
        return targets[nearest.1];
    }
    num / den
}

pub fn idw_predict(train: &Features, targets: &[f64], query: &Features, cfg: &IdwConfig) -> Result<Vec<f64>> {
    check_training(train, targets, query)?;
    if !(cfg.power > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "IDW power must be positive, got {}",
            cfg.power
        )));
    }
    let q: Vec<&[f64]> = query.rows().collect();
    Ok(q.par_iter().map(|x| idw_one(train, targets, x, cfg)).collect())
}

/// Indices of the `k` nearest rows, nearest first; equal distances order by index.
fn k_nearest(train: &Features, q: &[f64], k: usize) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = train.rows().enumerate().map(|(i, x)| (distance(x, q), i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_unstable_by(cmp);
    d
}

fn knn_one(train: &Features, targets: &[f64], q: &[f64], cfg: &KnnConfig) -> f64 {
    let nn = k_nearest(train, q, cfg.k);
    match cfg.weighting {
        KnnWeighting::Uniform => nn.iter().map(|&(_, i)| targets[i]).sum::<f64>() / nn.len() as f64,
        KnnWeighting::InverseDistance => {
            if nn[0].0 <= cfg.epsilon {
                return targets[nn[0].1];
            }
            let (num, den) = nn
                .iter()
                .fold((0.0, 0.0), |(n, d), &(dist, i)| (n + targets[i] / dist, d + 1.0 / dist));
            num / den
        }
    }
}

pub fn knn_predict(train: &Features, targets: &[f64], query: &Features, cfg: &KnnConfig) -> Result<Vec<f64>> {
    check_training(train, targets, query)?;
    if cfg.k == 0 || cfg.k > train.len() {
        return Err(Error::InvalidParameter(format!(
            "KNN needs 1 <= k <= M, got k = {} with M = {}",
            cfg.k,
            train.len()
        )));
    }
    let q: Vec<&[f64]> = query.rows().collect();
    Ok(q.par_iter().map(|x| knn_one(train, targets, x, cfg)).collect())
}
