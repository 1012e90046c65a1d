//! Exact Gaussian process regression on residuals.
//!
//! The residual field is a GP with constant prior mean and covariance given
//! by a [`KernelExpr`]. Fitting factorizes `K + jitter·I = L Lᵀ` and solves
//! `α = (K + jitter·I)⁻¹ (r − μ)`; prediction returns the posterior mean and
//! the per-point posterior variance.

mod artifact;
mod optimize;

use rayon::prelude::*;

use crate::dataset::{squared_distance, Dataset, FeatureScaler, Features};
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, gram_with_grads, KernelExpr};
use crate::linalg::{dot, Cholesky, Matrix};

pub use artifact::{load_model, save_model, ModelArtifact, ARTIFACT_FORMAT, ARTIFACT_VERSION};
pub use optimize::{optimize_hyperparameters, optimize_with, OptimizeOptions};

/// Relative jitter ladder, multiplied by the mean diagonal of `K`.
pub const JITTER_LADDER: [f64; 3] = [1e-8, 1e-6, 1e-4];

#[derive(Debug, Clone)]
pub struct GprModel {
    kernel: KernelExpr,
    train: Features,
    targets: Vec<f64>,
    prior_mean: f64,
    jitter: f64,
    chol: Cholesky,
    alpha: Vec<f64>,
}

/// Posterior mean (dB) and variance (dB²) per query point.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPrediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Factorizes `K + jitter·I`, escalating jitter through [`JITTER_LADDER`].
/// Returns the factor and the absolute jitter that succeeded.
pub(crate) fn factor_with_jitter(k: &Matrix, jitter: Option<f64>) -> Result<(Cholesky, f64)> {
    let n = k.nrows();
    let mean_diag = (k.diag().iter().sum::<f64>() / n as f64).abs().max(f64::MIN_POSITIVE);
    let first = jitter.unwrap_or(JITTER_LADDER[0] * mean_diag);
    let mut attempts = vec![first];
    attempts.extend(JITTER_LADDER.iter().map(|r| r * mean_diag).filter(|j| *j > first));
    let mut last = first;
    for j in attempts {
        last = j;
        let mut kj = k.clone();
        kj.add_diag(j);
        if let Some(c) = Cholesky::factor(&kj) {
            let ok = c.l().diag().iter().zip(kj.diag()).all(|(l, a)| l * l > 1e-14 * a);
            if ok {
                return Ok((c, j));
            }
        }
    }
    Err(Error::Conditioning { n, jitter: last })
}

fn check_train(train: &Features, targets: &[f64]) -> Result<()> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: train.len(),
            got: targets.len(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite target".into()));
    }
    Ok(())
}

/// Fits a zero-prior-mean GP. `jitter = None` uses the default ladder start.
pub fn gpr_fit(train: &Features, targets: &[f64], kernel: &KernelExpr, jitter: Option<f64>) -> Result<GprModel> {
    GprModel::fit(train, targets, kernel, 0.0, jitter)
}

impl GprModel {
    pub fn fit(
        train: &Features,
        targets: &[f64],
        kernel: &KernelExpr,
        prior_mean: f64,
        jitter: Option<f64>,
    ) -> Result<Self> {
        check_train(train, targets)?;
        if let Some(j) = jitter {
            if !(j >= 0.0) {
                return Err(Error::InvalidParameter(format!("jitter must be >= 0, got {j}")));
            }
        }
        let k = gram_matrix(kernel, train, train, true)?;
        let (chol, jitter) = factor_with_jitter(&k, jitter)?;
        let centered: Vec<f64> = targets.iter().map(|t| t - prior_mean).collect();
        let alpha = chol.solve(&centered);
        Ok(Self {
            kernel: kernel.clone(),
            train: train.clone(),
            targets: targets.to_vec(),
            prior_mean,
            jitter,
            chol,
            alpha,
        })
    }

    pub fn kernel(&self) -> &KernelExpr {
        &self.kernel
    }

    pub fn train_features(&self) -> &Features {
        &self.train
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `‖(K + jitter·I) α − (r − μ)‖∞`.
    pub fn solve_residual_norm(&self) -> Result<f64> {
        let mut k = gram_matrix(&self.kernel, &self.train, &self.train, true)?;
        k.add_diag(self.jitter);
        let ka = k.mul_vec(&self.alpha);
        Ok(ka
            .iter()
            .zip(&self.targets)
            .map(|(a, t)| (a - (t - self.prior_mean)).abs())
            .fold(0.0, f64::max))
    }

    fn check_query(&self, query: &Features) -> Result<()> {
        if query.dim() != self.train.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.train.dim(),
                got: query.dim(),
            });
        }
        Ok(())
    }

    fn cross_cov(&self, x: &[f64]) -> Vec<f64> {
        self.train
            .rows()
            .map(|t| self.kernel.value(squared_distance(t, x), false))
            .collect()
    }

    /// Posterior mean only; `O(M)` per query.
    pub fn predict_mean(&self, query: &Features) -> Result<Vec<f64>> {
        self.check_query(query)?;
        Ok((0..query.len())
            .into_par_iter()
            .map(|i| self.prior_mean + dot(&self.cross_cov(query.row(i)), &self.alpha))
            .collect())
    }

    pub(crate) fn predict_unclamped(&self, query: &Features) -> Result<PosteriorPrediction> {
        self.check_query(query)?;
        let prior_var = self.kernel.self_variance();
        let (mean, variance): (Vec<f64>, Vec<f64>) = (0..query.len())
            .into_par_iter()
            .map(|i| {
                let k = self.cross_cov(query.row(i));
                let m = self.prior_mean + dot(&k, &self.alpha);
                let v = self.chol.solve_lower(&k);
                (m, prior_var - dot(&v, &v))
            })
            .unzip();
        Ok(PosteriorPrediction { mean, variance })
    }

    /// Posterior mean and variance, variance clamped at zero.
    pub fn predict(&self, query: &Features) -> Result<PosteriorPrediction> {
        let mut p = self.predict_unclamped(query)?;
        p.variance.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(p)
    }

    /// Log marginal likelihood and its gradient with respect to each free log-hyperparameter.
    pub fn log_marginal_likelihood(&self) -> (f64, Vec<f64>) {
        let m = self.targets.len() as f64;
        let data_fit: f64 = self
            .targets
            .iter()
            .zip(&self.alpha)
            .map(|(t, a)| (t - self.prior_mean) * a)
            .sum();
        let log_det_half: f64 = self.chol.l().diag().iter().map(|d| d.ln()).sum();
        let value = -0.5 * data_fit - log_det_half - 0.5 * m * (2.0 * std::f64::consts::PI).ln();

        let (_, grads) = gram_with_grads(&self.kernel, &self.train);
        let kinv = self.chol.inverse();
        let n = self.targets.len();
        let gradient = grads
            .iter()
            .map(|dk| {
                let mut acc = 0.0;
                for i in 0..n {
                    let ai = self.alpha[i];
                    let row_k = kinv.row(i);
                    let row_d = dk.row(i);
                    for j in 0..n {
                        acc += (ai * self.alpha[j] - row_k[j]) * row_d[j];
                    }
                }
                0.5 * acc
            })
            .collect();
        (value, gradient)
    }
}

pub fn gpr_predict(model: &GprModel, query: &Features) -> Result<PosteriorPrediction> {
    model.predict(query)
}

pub fn log_marginal_likelihood(model: &GprModel) -> (f64, Vec<f64>) {
    model.log_marginal_likelihood()
}

/// Recombines the simulated map with the posterior residual mean:
/// `rsrp_sim + μ*` at every candidate, training points included.
pub fn predict_rsrp_map(model: &GprModel, dataset: &Dataset, scaler: &FeatureScaler) -> Result<Vec<f64>> {
    let query = scaler.apply(&dataset.features())?;
    let mean = model.predict_mean(&query)?;
    Ok(dataset
        .samples()
        .iter()
        .zip(mean)
        .map(|(s, m)| s.gamma_sim + m)
        .collect())
}
