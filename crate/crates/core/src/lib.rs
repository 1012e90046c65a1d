//! Recovery of 3D radio maps (RSRP fields) from sparse measurements.
//!
//! The measured RSRP at a point is modelled as the simulated RSRP plus a
//! spatially correlated residual plus noise. A Gaussian process is fitted to
//! the residuals over `[x, y, z, rsrp_sim]` features, and the map is recovered
//! as `rsrp_sim + posterior mean`.
//!
//! * [`dataset`]: samples, residuals, feature standardization, CSV I/O
//! * [`kernels`]: composable covariance expressions with log-space gradients
//! * [`gpr`]: exact GP regression, marginal likelihood and hyperparameter search
//! * [`selection`]: random, online max-variance and offline k-means point selection
//! * [`baselines`]: IDW, KNN and ordinary kriging
//! * [`scenario`]: synthetic urban propagation scenarios
//! * [`eval`]: trials, sweeps and report emission

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod gpr;
pub mod kernels;
pub mod linalg;
pub mod rng;
pub mod scenario;
pub mod selection;

pub use error::{Error, Result};
