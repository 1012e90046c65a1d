//! Lloyd's k-means with farthest-point seeding, and centroid-nearest selection.

use rand::Rng as _;

use super::{check_budget, HyperRefit, SelectionMethod, SelectionPlan};
use crate::dataset::{squared_distance, Features};
use crate::error::Result;
use crate::rng::{seeded, streams};

pub const KMEANS_MAX_ITERS: usize = 100;
pub const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansState {
    pub centroids: Features,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after the assignment step of every iteration.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

/// Nearest centroid and its squared distance; ties go to the lowest id.
fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centroids.iter().enumerate() {
        let d = squared_distance(x, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn farthest_point_seeds(features: &Features, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = features.len();
    let mut rng = seeded(seed, streams::KMEANS);
    let first = rng.random_range(0..n);
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut centers = vec![features.row(first).to_vec()];
    let mut min_d: Vec<f64> = features
        .rows()
        .map(|x| squared_distance(x, features.row(first)))
        .collect();
    while centers.len() < k {
        let mut pick = None;
        let mut best = f64::NEG_INFINITY;
        for (i, d) in min_d.iter().enumerate() {
            if !chosen[i] && *d > best {
                best = *d;
                pick = Some(i);
            }
        }
        let pick = pick.expect("k <= n");
        chosen[pick] = true;
        let c = features.row(pick).to_vec();
        for (i, x) in features.rows().enumerate() {
            min_d[i] = min_d[i].min(squared_distance(x, &c));
        }
        centers.push(c);
    }
    centers
}

struct Assignment {
    labels: Vec<usize>,
    dist: Vec<f64>,
}

fn assign(features: &Features, centroids: &[Vec<f64>]) -> Assignment {
    let (labels, dist) = features.rows().map(|x| nearest(x, centroids)).unzip();
    Assignment { labels, dist }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn reseed_empty(features: &Features, centroids: &mut [Vec<f64>], a: &mut Assignment) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        a.labels.iter().for_each(|&l| sizes[l] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut best = f64::NEG_INFINITY;
        for (i, d) in a.dist.iter().enumerate() {
            if sizes[a.labels[i]] > 1 && *d > best {
                best = *d;
                far = Some(i);
            }
        }
        let Some(i) = far else {
            return;
        };
        centroids[empty] = features.row(i).to_vec();
        a.labels[i] = empty;
        a.dist[i] = 0.0;
    }
}

fn means(features: &Features, labels: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = features.dim();
    let k = old.len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (x, &l) in features.rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(x) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((s, c), o)| {
            if c == 0 {
                o.clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

/// Lloyd iterations until the largest centroid shift drops below `tol`.
pub fn kmeans_cluster(features: &Features, k: usize, seed: u64, max_iters: usize, tol: f64) -> Result<KMeansState> {
    check_budget(k, features.len())?;
    let mut centroids = farthest_point_seeds(features, k, seed);
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let mut a = assign(features, &centroids);
        reseed_empty(features, &mut centroids, &mut a);
        history.push(a.dist.iter().sum());
        let next = means(features, &a.labels, &centroids);
        let shift = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| squared_distance(a, b))
            .fold(0.0f64, f64::max)
            .sqrt();
        centroids = next;
        if shift < tol {
            break;
        }
    }
    let mut a = assign(features, &centroids);
    reseed_empty(features, &mut centroids, &mut a);
    let inertia = a.dist.iter().sum();
    let flat = centroids.into_iter().flatten().collect();
    Ok(KMeansState {
        centroids: Features::new(features.dim(), flat)?,
        assignments: a.labels,
        inertia,
        inertia_history: history,
        iterations,
    })
}

/// One candidate per cluster: the member nearest its centroid, in cluster order.
pub fn select_offline_kmeans(candidates: &Features, m: usize, seed: u64) -> Result<SelectionPlan> {
    let state = kmeans_cluster(candidates, m, seed, KMEANS_MAX_ITERS, KMEANS_TOL)?;
    let mut best: Vec<Option<(usize, f64)>> = vec![None; m];
    for (i, x) in candidates.rows().enumerate() {
        let l = state.assignments[i];
        let d = squared_distance(x, state.centroids.row(l));
        if best[l].is_none_or(|(_, bd)| d < bd) {
            best[l] = Some((i, d));
        }
    }
    let ordered_indices = best
        .into_iter()
        .map(|b| b.map(|(i, _)| i))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| crate::Error::Selection("k-means left a cluster empty".into()))?;
    Ok(SelectionPlan {
        method: SelectionMethod::OfflineKmeans,
        ordered_indices,
        seed,
        hyper_refit: HyperRefit::Never,
        kernel: None,
    })
}
