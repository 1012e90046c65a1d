//! Trials, parameter sweeps and report emission.
//!
//! A trial selects `M = max(1, round(rate · N))` candidates, reveals their
//! measurements, fits one scheme on the revealed targets and scores the
//! recovered RSRP on every candidate that was not selected.

mod report;
mod sweep;

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    fit_variogram, idw_predict, knn_predict, IdwConfig, KnnConfig, KrigingModel, VariogramFamily, DEFAULT_BIN_COUNT,
};
use crate::dataset::{Dataset, FeatureMode, FeatureScaler, Features};
use crate::error::{Error, Result};
use crate::gpr::{optimize_with, GprModel, OptimizeOptions};
use crate::kernels::{parse_kernel, KernelExpr};
use crate::rng::{seeded, streams};
use crate::selection::{
    run_online_map, select_offline_kmeans, select_random, HyperRefit, OnlineMapConfig, SelectionMethod, SelectionPlan,
};

pub use report::{emit_report, read_results_csv, render_svg, PlotSeries, ReportFiles};
pub use sweep::{aggregate, run_sweep, run_sweep_on, AggregateRow, EvalReport, SweepConfig, TrialRecord};

/// Root-mean-square error in dB.
pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sse: f64 = predicted.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / truth.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Gpr,
    Idw,
    Knn,
    Kriging,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Gpr, Scheme::Idw, Scheme::Knn, Scheme::Kriging];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Gpr => "gpr",
            Scheme::Idw => "idw",
            Scheme::Knn => "knn",
            Scheme::Kriging => "kriging",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gpr" => Ok(Scheme::Gpr),
            "idw" => Ok(Scheme::Idw),
            "knn" => Ok(Scheme::Knn),
            "kriging" => Ok(Scheme::Kriging),
            other => Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GprSettings {
    /// Kernel expression; its values seed the hyperparameter search.
    pub kernel: String,
    /// Re-optimize hyperparameters on the revealed training targets.
    pub optimize: bool,
    pub restarts: usize,
    pub max_iters: usize,
    /// Hyperparameters are fitted on at most this many training points.
    pub max_hyper_points: usize,
}

impl Default for GprSettings {
    fn default() -> Self {
        Self {
            kernel: "const(1) * matern(l=1,nu=1.5) + white(0.1)".into(),
            optimize: true,
            restarts: 2,
            max_iters: 100,
            max_hyper_points: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrigingSettings {
    pub family: VariogramFamily,
    pub bin_count: usize,
}

impl Default for KrigingSettings {
    fn default() -> Self {
        Self {
            family: VariogramFamily::Exponential,
            bin_count: DEFAULT_BIN_COUNT,
        }
    }
}

/// Settings for every scheme; a trial reads the one it needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSettings {
    pub gpr: GprSettings,
    pub idw: IdwConfig,
    pub knn: KnnConfig,
    pub kriging: KrigingSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub scheme: Scheme,
    pub selection: SelectionMethod,
    pub rate: f64,
    pub feature_mode: FeatureMode,
    pub seed: u64,
    /// Overrides the GPR kernel text of `settings` (kernel ablation).
    pub kernel: Option<KernelExpr>,
    pub settings: SchemeSettings,
}

impl TrialSpec {
    pub fn new(scheme: Scheme, selection: SelectionMethod, rate: f64, feature_mode: FeatureMode, seed: u64) -> Self {
        Self {
            scheme,
            selection,
            rate,
            feature_mode,
            seed,
            kernel: None,
            settings: SchemeSettings::default(),
        }
    }

    fn gpr_kernel(&self) -> Result<KernelExpr> {
        match &self.kernel {
            Some(k) => Ok(k.clone()),
            None => parse_kernel(&self.settings.gpr.kernel),
        }
    }
}

/// Number of training points for a sampling rate over `n` candidates.
pub fn training_size(rate: f64, n: usize) -> Result<usize> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling rate must be in (0, 1], got {rate}"
        )));
    }
    if rate * (n as f64) < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "rate {rate} selects fewer than one of {n} candidates"
        )));
    }
    Ok(((rate * n as f64).round() as usize).clamp(1, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub rmse: f64,
    pub plan: SelectionPlan,
    /// Recovered RSRP at every candidate.
    pub predicted: Vec<f64>,
    pub n_test: usize,
}

/// Standardized features, regression targets and the additive base map.
///
/// With simulated RSRP the targets are residuals and the base is `rsrp_sim`;
/// without it the targets are raw measurements and the base is zero.
struct Problem {
    features: Features,
    targets: Vec<f64>,
    base: Vec<f64>,
}

impl Problem {
    fn new(dataset: &Dataset, mode: FeatureMode, labels: &[Option<f64>]) -> Result<Self> {
        let ds = dataset.with_feature_mode(mode);
        let raw = ds.features();
        let features = FeatureScaler::fit(&raw)?.apply(&raw)?;
        let base: Vec<f64> = match mode {
            FeatureMode::PositionPlusSim => ds.gamma_sim(),
            FeatureMode::PositionOnly => vec![0.0; ds.len()],
        };
        let targets = labels
            .iter()
            .zip(&base)
            .map(|(l, b)| l.map_or(f64::NAN, |l| l - b))
            .collect();
        Ok(Self {
            features,
            targets,
            base,
        })
    }

    fn train_targets(&self, plan: &SelectionPlan) -> Result<Vec<f64>> {
        plan.ordered_indices
            .iter()
            .map(|&i| {
                let t = self.targets[i];
                if t.is_nan() {
                    Err(Error::MissingMeasurement { index: i })
                } else {
                    Ok(t)
                }
            })
            .collect()
    }
}

fn hyper_subset(train: &Features, targets: &[f64], limit: usize, seed: u64) -> (Features, Vec<f64>) {
    if train.len() <= limit {
        return (train.clone(), targets.to_vec());
    }
    let mut rng = seeded(seed, streams::HYPER_SUBSET);
    let mut idx = sample(&mut rng, train.len(), limit).into_vec();
    idx.sort_unstable();
    (train.select(&idx), idx.iter().map(|&i| targets[i]).collect())
}

/// Prior mean for the GP: zero on residuals, the sample mean on raw RSRP.
fn gpr_prior_mean(mode: FeatureMode, targets: &[f64]) -> f64 {
    match mode {
        FeatureMode::PositionPlusSim => 0.0,
        FeatureMode::PositionOnly => targets.iter().sum::<f64>() / targets.len() as f64,
    }
}

fn fit_gpr(
    template: &KernelExpr,
    settings: &GprSettings,
    train: &Features,
    targets: &[f64],
    prior_mean: f64,
    seed: u64,
) -> Result<GprModel> {
    let kernel = if settings.optimize {
        let (x, y) = hyper_subset(train, targets, settings.max_hyper_points, seed);
        let opts = OptimizeOptions {
            restarts: settings.restarts,
            seed,
            prior_mean,
            max_iters: settings.max_iters,
        };
        optimize_with(&x, &y, template, opts)?.0
    } else {
        template.clone()
    };
    GprModel::fit(train, targets, &kernel, prior_mean, None)
}

/// Fits `scheme` on the selected candidates and predicts targets at every candidate.
fn fit_predict(
    scheme: Scheme,
    spec_kernel: &KernelExpr,
    settings: &SchemeSettings,
    mode: FeatureMode,
    features: &Features,
    plan: &SelectionPlan,
    targets: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    let train = features.select(&plan.ordered_indices);
    match scheme {
        Scheme::Gpr => {
            let model = fit_gpr(
                spec_kernel,
                &settings.gpr,
                &train,
                targets,
                gpr_prior_mean(mode, targets),
                seed,
            )?;
            model.predict_mean(features)
        }
        Scheme::Idw => idw_predict(&train, targets, features, &settings.idw),
        Scheme::Knn => {
            let cfg = KnnConfig {
                k: settings.knn.k.min(train.len()),
                ..settings.knn
            };
            knn_predict(&train, targets, features, &cfg)
        }
        Scheme::Kriging => {
            let vg = fit_variogram(&train, targets, settings.kriging.family, settings.kriging.bin_count)?;
            KrigingModel::fit(&train, targets, vg)?.predict_mean(features)
        }
    }
}

fn select(spec: &TrialSpec, problem: &Problem, m: usize, kernel: &KernelExpr) -> Result<SelectionPlan> {
    let n = problem.features.len();
    match spec.selection {
        SelectionMethod::Random => select_random(n, m, spec.seed),
        SelectionMethod::OfflineKmeans => select_offline_kmeans(&problem.features, m, spec.seed),
        SelectionMethod::OnlineMap => {
            if spec.scheme != Scheme::Gpr {
                return Err(Error::InvalidParameter(format!(
                    "online selection needs the GP posterior and cannot drive `{}`",
                    spec.scheme
                )));
            }
            let labels_known = problem.targets.iter().all(|t| !t.is_nan());
            let refit = if spec.settings.gpr.optimize && labels_known {
                HyperRefit::initial_batch(m)
            } else {
                HyperRefit::Never
            };
            let cfg = OnlineMapConfig {
                kernel: kernel.clone(),
                refit,
                restarts: spec.settings.gpr.restarts,
                prior_mean: match spec.feature_mode {
                    FeatureMode::PositionPlusSim => Some(0.0),
                    FeatureMode::PositionOnly => None,
                },
                max_refit_points: spec.settings.gpr.max_hyper_points,
            };
            let labels = labels_known.then_some(problem.targets.as_slice());
            Ok(run_online_map(&problem.features, m, &cfg, spec.seed, labels)?.plan)
        }
    }
}

/// Runs one trial on a fully measured dataset.
pub fn run_trial(dataset: &Dataset, spec: &TrialSpec) -> Result<TrialOutcome> {
    let truth = dataset.gamma_meas()?;
    let labels: Vec<Option<f64>> = truth.iter().map(|&t| Some(t)).collect();
    let problem = Problem::new(dataset, spec.feature_mode, &labels)?;
    let n = dataset.len();
    let m = training_size(spec.rate, n)?;
    let kernel = spec.gpr_kernel()?;
    let plan = select(spec, &problem, m, &kernel)?;
    plan.validate(n, m)?;

    let mask = plan.mask(n);
    let test: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
    debug_assert!(test.iter().all(|&i| !mask[i]));
    log::debug!(
        "trial {} {} rate={} seed={}: {} train, {} test",
        spec.scheme,
        spec.selection,
        spec.rate,
        spec.seed,
        m,
        test.len()
    );

    let y = problem.train_targets(&plan)?;
    let fitted = fit_predict(
        spec.scheme,
        &kernel,
        &spec.settings,
        spec.feature_mode,
        &problem.features,
        &plan,
        &y,
        spec.seed,
    )?;
    let predicted: Vec<f64> = fitted.iter().zip(&problem.base).map(|(f, b)| f + b).collect();

    let rmse = if test.is_empty() {
        log::warn!("every candidate was selected for training; RMSE is reported as 0");
        0.0
    } else {
        let p: Vec<f64> = test.iter().map(|&i| predicted[i]).collect();
        let t: Vec<f64> = test.iter().map(|&i| truth[i]).collect();
        rmse(&p, &t)?
    };
    Ok(TrialOutcome {
        rmse,
        plan,
        predicted,
        n_test: test.len(),
    })
}

/// Selects `m` candidates; measurements are used only where the method needs them.
pub fn select_for_dataset(
    dataset: &Dataset,
    method: SelectionMethod,
    m: usize,
    seed: u64,
    settings: &SchemeSettings,
) -> Result<SelectionPlan> {
    let labels: Vec<Option<f64>> = dataset.samples().iter().map(|s| s.gamma_meas()).collect();
    let problem = Problem::new(dataset, dataset.feature_mode, &labels)?;
    let spec = TrialSpec {
        settings: settings.clone(),
        ..TrialSpec::new(Scheme::Gpr, method, 1.0, dataset.feature_mode, seed)
    };
    let kernel = spec.gpr_kernel()?;
    select(&spec, &problem, m, &kernel)
}

/// Recovers RSRP at every candidate from the measurements at the plan's indices.
pub fn predict_with_plan(
    dataset: &Dataset,
    plan: &SelectionPlan,
    scheme: Scheme,
    settings: &SchemeSettings,
) -> Result<Vec<f64>> {
    plan.validate(dataset.len(), plan.len())?;
    let labels: Vec<Option<f64>> = dataset.samples().iter().map(|s| s.gamma_meas()).collect();
    let problem = Problem::new(dataset, dataset.feature_mode, &labels)?;
    let y = problem.train_targets(plan)?;
    let kernel = parse_kernel(&settings.gpr.kernel)?;
    let fitted = fit_predict(
        scheme,
        &kernel,
        settings,
        dataset.feature_mode,
        &problem.features,
        plan,
        &y,
        plan.seed,
    )?;
    Ok(fitted.iter().zip(&problem.base).map(|(f, b)| f + b).collect())
}
