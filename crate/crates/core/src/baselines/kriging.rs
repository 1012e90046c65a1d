//! Ordinary kriging with a fitted isotropic variogram.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_training;
use crate::dataset::{distance, Features};
use crate::error::{Error, Result};
use crate::linalg::{dot, Lu, Matrix};

pub const DEFAULT_BIN_COUNT: usize = 15;
const MIN_POINTS: usize = 10;
const RANGE_GRID: usize = 80;
const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariogramFamily {
    #[default]
    Exponential,
    Spherical,
    Gaussian,
}

impl VariogramFamily {
    /// Normalized shape rising from 0 at the origin towards 1.
    fn shape(self, d: f64, range: f64) -> f64 {
        let h = d / range;
        match self {
            VariogramFamily::Exponential => 1.0 - (-h).exp(),
            VariogramFamily::Spherical if h >= 1.0 => 1.0,
            VariogramFamily::Spherical => 1.5 * h - 0.5 * h * h * h,
            VariogramFamily::Gaussian => 1.0 - (-h * h).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramModel {
    pub family: VariogramFamily,
    pub nugget: f64,
    /// Partial sill; the variogram levels off at `nugget + sill`.
    pub sill: f64,
    pub range: f64,
    pub bin_count: usize,
}

impl VariogramModel {
    pub fn new(family: VariogramFamily, nugget: f64, sill: f64, range: f64) -> Result<Self> {
        if !(nugget >= 0.0 && sill > 0.0 && range > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variogram needs nugget >= 0, sill > 0, range > 0 (got {nugget}, {sill}, {range})"
            )));
        }
        Ok(Self {
            family,
            nugget,
            sill,
            range,
            bin_count: DEFAULT_BIN_COUNT,
        })
    }

    /// Semivariance at separation `d`; exactly zero at the origin.
    pub fn eval(&self, d: f64) -> f64 {
        if d == 0.0 {
            0.0
        } else {
            self.nugget + self.sill * self.family.shape(d, self.range)
        }
    }
}

pub fn semivariance(model: &VariogramModel, d: f64) -> f64 {
    model.eval(d)
}

/// Binned semivariances `½·mean[(rᵢ−rⱼ)²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalVariogram {
    pub centers: Vec<f64>,
    pub semivariance: Vec<f64>,
    pub counts: Vec<usize>,
}

impl EmpiricalVariogram {
    pub fn compute(train: &Features, targets: &[f64], bin_count: usize) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::InvalidParameter("variogram needs at least one bin".into()));
        }
        let n = train.len();
        let mut max_d = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                max_d = max_d.max(distance(train.row(i), train.row(j)));
            }
        }
        if max_d == 0.0 {
            return Err(Error::InvalidParameter("all training points coincide".into()));
        }
        let max_lag = max_d / 2.0;
        let width = max_lag / bin_count as f64;
        let mut sums = vec![0.0; bin_count];
        let mut counts = vec![0usize; bin_count];
        for i in 0..n {
            for j in i + 1..n {
                let d = distance(train.row(i), train.row(j));
                if d > max_lag {
                    continue;
                }
                let b = ((d / width) as usize).min(bin_count - 1);
                let diff = targets[i] - targets[j];
                sums[b] += 0.5 * diff * diff;
                counts[b] += 1;
            }
        }
        Ok(Self {
            centers: (0..bin_count).map(|b| (b as f64 + 0.5) * width).collect(),
            semivariance: sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect(),
            counts,
        })
    }

    fn max_lag(&self) -> f64 {
        let w = self.centers[0] * 2.0;
        w * self.centers.len() as f64
    }
}

struct LinearFit {
    nugget: f64,
    sill: f64,
    sse: f64,
}

/// Weighted least squares for `(nugget, sill)` at fixed range, `nugget ≥ 0`, `sill ≥ floor`.
fn fit_linear(emp: &EmpiricalVariogram, family: VariogramFamily, range: f64, floor: f64) -> LinearFit {
    let pts: Vec<(f64, f64, f64)> = emp
        .centers
        .iter()
        .zip(&emp.semivariance)
        .zip(&emp.counts)
        .filter(|(_, &c)| c > 0)
        .map(|((&d, &g), &c)| (c as f64, family.shape(d, range), g))
        .collect();
    let (mut sw, mut sf, mut sff, mut sg, mut sfg) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(w, f, g) in &pts {
        sw += w;
        sf += w * f;
        sff += w * f * f;
        sg += w * g;
        sfg += w * f * g;
    }
    let sse = |n: f64, s: f64| pts.iter().map(|&(w, f, g)| w * (g - n - s * f).powi(2)).sum::<f64>();
    let mut candidates = Vec::with_capacity(3);
    let det = sw * sff - sf * sf;
    if det.abs() > 1e-12 * sw * sff {
        let s = (sw * sfg - sf * sg) / det;
        let n = (sg - s * sf) / sw;
        if n >= 0.0 && s >= floor {
            candidates.push((n, s));
        }
    }
    if sff > 0.0 {
        candidates.push((0.0, (sfg / sff).max(floor)));
    }
    candidates.push((((sg - floor * sf) / sw).max(0.0), floor));
    candidates
        .into_iter()
        .map(|(n, s)| LinearFit {
            nugget: n,
            sill: s,
            sse: sse(n, s),
        })
        .min_by(|a, b| a.sse.total_cmp(&b.sse))
        .expect("at least one candidate")
}

/// Fits `(nugget, sill, range)` to the binned empirical variogram.
pub fn fit_variogram(
    train: &Features,
    targets: &[f64],
    family: VariogramFamily,
    bin_count: usize,
) -> Result<VariogramModel> {
    if train.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: train.len(),
            got: targets.len(),
        });
    }
    if train.len() < MIN_POINTS {
        return Err(Error::InvalidParameter(format!(
            "variogram fitting needs at least {MIN_POINTS} points, got {}; sample more points",
            train.len()
        )));
    }
    let emp = EmpiricalVariogram::compute(train, targets, bin_count)?;
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / targets.len() as f64;
    let floor = 1e-6 * var.max(1.0);

    let max_lag = emp.max_lag();
    let (lo, hi) = ((max_lag / bin_count as f64 / 4.0).ln(), (4.0 * max_lag).ln());
    let eval = |log_r: f64| fit_linear(&emp, family, log_r.exp(), floor).sse;
    let grid: Vec<f64> = (0..RANGE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (RANGE_GRID - 1) as f64)
        .collect();
    let best = (0..RANGE_GRID)
        .min_by(|&a, &b| eval(grid[a]).total_cmp(&eval(grid[b])))
        .expect("nonempty grid");
    // golden-section refinement between the neighbouring grid nodes
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(RANGE_GRID - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if eval(c) <= eval(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mut log_r = 0.5 * (a + b);
    if eval(grid[best]) < eval(log_r) {
        log_r = grid[best];
    }
    let range = log_r.exp();
    let fit = fit_linear(&emp, family, range, floor);
    Ok(VariogramModel {
        family,
        nugget: fit.nugget,
        sill: fit.sill,
        range,
        bin_count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingPrediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Factored ordinary-kriging system for one training set.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    train: Features,
    variogram: VariogramModel,
    lu: Lu,
    /// `A⁻¹ [r; 0]`, which turns each mean prediction into a dot product.
    beta: Vec<f64>,
}

impl KrigingModel {
    pub fn fit(train: &Features, targets: &[f64], variogram: VariogramModel) -> Result<Self> {
        check_training(train, targets, train)?;
        let m = train.len();
        let mut a = Matrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..i {
                let v = variogram.eval(distance(train.row(i), train.row(j)));
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
            a[(i, m)] = 1.0;
            a[(m, i)] = 1.0;
        }
        let scale = variogram.nugget + variogram.sill;
        let mut last = Err(Error::SingularKriging);
        for j in JITTER_LADDER {
            // a diagonal jitter in covariance form is a negative semivariance on the diagonal
            let mut aj = a.clone();
            for i in 0..m {
                aj[(i, i)] = -j * scale;
            }
            last = Lu::factor(&aj);
            if last.is_ok() {
                break;
            }
        }
        let lu = last?;
        let mut rhs = targets.to_vec();
        rhs.push(0.0);
        let beta = lu.solve(&rhs);
        Ok(Self {
            train: train.clone(),
            variogram,
            lu,
            beta,
        })
    }

    pub fn variogram(&self) -> &VariogramModel {
        &self.variogram
    }

    fn rhs(&self, q: &[f64]) -> Vec<f64> {
        let mut b: Vec<f64> = self.train.rows().map(|x| self.variogram.eval(distance(x, q))).collect();
        b.push(1.0);
        b
    }

    /// Kriging weights and Lagrange multiplier for one query point.
    pub fn weights(&self, q: &[f64]) -> (Vec<f64>, f64) {
        let mut w = self.lu.solve(&self.rhs(q));
        let lambda = w.pop().expect("augmented system");
        (w, lambda)
    }

    pub fn predict_mean(&self, query: &Features) -> Result<Vec<f64>> {
        if query.dim() != self.train.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.train.dim(),
                got: query.dim(),
            });
        }
        let q: Vec<&[f64]> = query.rows().collect();
        Ok(q.par_iter().map(|x| dot(&self.rhs(x), &self.beta)).collect())
    }

    /// Mean and kriging variance; the variance costs one full solve per query.
    pub fn predict(&self, query: &Features) -> Result<KrigingPrediction> {
        let mean = self.predict_mean(query)?;
        let q: Vec<&[f64]> = query.rows().collect();
        let variance = q
            .par_iter()
            .map(|x| {
                let b = self.rhs(x);
                let (w, lambda) = self.weights(x);
                (dot(&w, &b[..w.len()]) + lambda).max(0.0)
            })
            .collect();
        Ok(KrigingPrediction { mean, variance })
    }
}

/// Ordinary-kriging mean and variance at every query point.
pub fn kriging_predict(
    train: &Features,
    targets: &[f64],
    variogram: &VariogramModel,
    query: &Features,
) -> Result<KrigingPrediction> {
    check_training(train, targets, query)?;
    KrigingModel::fit(train, targets, *variogram)?.predict(query)
}
