//! Classical spatial interpolators used as reference schemes.
//!
//! Like the GP, every baseline works on standardized features and predicts
//! residuals; the final RSRP is `rsrp_sim + prediction`.

mod kriging;
mod neighbors;

pub use kriging::{
    fit_variogram, kriging_predict, semivariance, EmpiricalVariogram, KrigingModel, KrigingPrediction, VariogramFamily,
    VariogramModel, DEFAULT_BIN_COUNT,
};
pub use neighbors::{idw_predict, knn_predict, IdwConfig, KnnConfig, KnnWeighting};

use crate::dataset::Features;
use crate::error::{Error, Result};

pub(crate) fn check_training(train: &Features, targets: &[f64], query: &Features) -> Result<()> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: train.len(),
            got: targets.len(),
        });
    }
    if query.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: query.dim(),
        });
    }
    Ok(())
}
