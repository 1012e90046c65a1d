//! Versioned JSON artifact for fitted models.
//!
//! The Cholesky factor is not stored; it is recomputed on load and the stored
//! weight vector is checked against the refactored system.

use serde::{Deserialize, Serialize};

use super::{factor_with_jitter, GprModel};
use crate::dataset::{FeatureScaler, Features};
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, parse_kernel};

pub const ARTIFACT_FORMAT: &str = "radiomap-gpr";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub kernel: String,
    pub prior_mean: f64,
    pub jitter: f64,
    pub scaler: FeatureScaler,
    pub feature_dim: usize,
    pub train_features: Vec<f64>,
    pub targets: Vec<f64>,
    pub alpha: Vec<f64>,
}

pub fn save_model(model: &GprModel, scaler: &FeatureScaler) -> Result<String> {
    let art = ModelArtifact {
        format: ARTIFACT_FORMAT.into(),
        version: ARTIFACT_VERSION,
        kernel: model.kernel.to_string(),
        prior_mean: model.prior_mean,
        jitter: model.jitter,
        scaler: scaler.clone(),
        feature_dim: model.train.dim(),
        train_features: model.train.as_slice().to_vec(),
        targets: model.targets.clone(),
        alpha: model.alpha.clone(),
    };
    Ok(serde_json::to_string_pretty(&art)?)
}

pub fn load_model(text: &str) -> Result<(GprModel, FeatureScaler)> {
    let art: ModelArtifact = serde_json::from_str(text)?;
    if art.format != ARTIFACT_FORMAT {
        return Err(Error::Artifact(format!("unexpected format `{}`", art.format)));
    }
    if art.version != ARTIFACT_VERSION {
        return Err(Error::Artifact(format!("unsupported version {}", art.version)));
    }
    let kernel = parse_kernel(&art.kernel)?;
    let train = Features::new(art.feature_dim, art.train_features)?;
    if art.scaler.dim() != train.dim() {
        return Err(Error::Artifact("scaler and feature dimensions differ".into()));
    }
    if train.len() != art.targets.len() || train.len() != art.alpha.len() {
        return Err(Error::Artifact("feature, target and weight counts differ".into()));
    }
    let k = gram_matrix(&kernel, &train, &train, true)?;
    let (chol, jitter) = factor_with_jitter(&k, Some(art.jitter))?;
    let model = GprModel {
        kernel,
        train,
        targets: art.targets,
        prior_mean: art.prior_mean,
        jitter,
        chol,
        alpha: art.alpha,
    };
    let bound = 1e-6 * (1.0 + model.targets.iter().fold(0.0f64, |m, t| m.max(t.abs())));
    let resid = model.solve_residual_norm()?;
    if !(resid < bound) {
        return Err(Error::Artifact(format!(
            "stored weights do not solve the kernel system (residual {resid:e} > {bound:e})"
        )));
    }
    Ok((model, art.scaler))
}
