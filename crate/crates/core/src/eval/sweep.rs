//! Grids of trials and their aggregation.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trial, training_size, Scheme, SchemeSettings, TrialSpec};
use crate::dataset::{load_dataset, Dataset, FeatureMode};
use crate::error::{Error, Result};
use crate::kernels::{ablation_variants, KernelExpr, KernelTemplate};
use crate::scenario::{generate_dataset, generate_scenario, ScenarioConfig};
use crate::selection::SelectionMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Scenario generated when no dataset file is given.
    pub scenario: ScenarioConfig,
    pub scenario_seed: u64,
    /// Fully measured dataset CSV; relative paths resolve against the working directory.
    pub dataset: Option<PathBuf>,
    pub rates: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub selections: Vec<SelectionMethod>,
    pub feature_modes: Vec<FeatureMode>,
    pub seeds: Vec<u64>,
    /// Replace the scheme × selection grid by GPR with random selection
    /// over the twelve kernel variants.
    pub kernel_ablation: bool,
    pub kernel_template: KernelTemplate,
    pub settings: SchemeSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            scenario_seed: 0,
            dataset: None,
            rates: vec![0.01, 0.02, 0.05, 0.10, 0.14, 0.20],
            schemes: Scheme::ALL.to_vec(),
            selections: vec![
                SelectionMethod::Random,
                SelectionMethod::OnlineMap,
                SelectionMethod::OfflineKmeans,
            ],
            feature_modes: vec![FeatureMode::PositionPlusSim],
            seeds: (0..10).collect(),
            kernel_ablation: false,
            kernel_template: KernelTemplate::default(),
            settings: SchemeSettings::default(),
        }
    }
}

impl SweepConfig {
    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            Some(path) => load_dataset(&std::fs::read_to_string(path)?, FeatureMode::PositionPlusSim),
            None => generate_dataset(&generate_scenario(&self.scenario, self.scenario_seed)?),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.seeds.is_empty() || self.feature_modes.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs rates, seeds and feature modes".into(),
            ));
        }
        if !self.kernel_ablation && (self.schemes.is_empty() || self.selections.is_empty()) {
            return Err(Error::InvalidParameter("sweep needs schemes and selections".into()));
        }
        Ok(())
    }
}

/// One trial's outcome; `rmse` is `None` when the trial failed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub selection: SelectionMethod,
    pub feature_mode: FeatureMode,
    /// Kernel-ablation label, empty outside ablation mode.
    pub kernel: String,
    pub rate: f64,
    pub seed: u64,
    pub m: usize,
    pub n_test: usize,
    pub rmse: Option<f64>,
    pub error: Option<String>,
    /// Wall time in milliseconds; not part of the deterministic output.
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub scheme: Scheme,
    pub selection: SelectionMethod,
    pub feature_mode: FeatureMode,
    pub kernel: String,
    pub rate: f64,
    /// Successful trials.
    pub count: usize,
    pub errors: usize,
    pub mean: f64,
    /// Sample standard deviation over seeds; zero for a single trial.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

impl EvalReport {
    pub fn from_records(records: Vec<TrialRecord>) -> Self {
        let aggregates = aggregate(&records);
        Self { records, aggregates }
    }

    /// Aggregate for one cell of the grid, if present.
    pub fn find(
        &self,
        scheme: Scheme,
        selection: SelectionMethod,
        mode: FeatureMode,
        kernel: &str,
        rate: f64,
    ) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| {
            a.scheme == scheme
                && a.selection == selection
                && a.feature_mode == mode
                && a.kernel == kernel
                && a.rate == rate
        })
    }
}

/// Mean and standard deviation per `(kernel, feature mode, selection, scheme, rate)`,
/// in order of first appearance.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut rows: Vec<(AggregateRow, Vec<f64>)> = Vec::new();
    for r in records {
        let pos = rows.iter().position(|(a, _)| {
            a.scheme == r.scheme
                && a.selection == r.selection
                && a.feature_mode == r.feature_mode
                && a.kernel == r.kernel
                && a.rate == r.rate
        });
        let idx = pos.unwrap_or_else(|| {
            rows.push((
                AggregateRow {
                    scheme: r.scheme,
                    selection: r.selection,
                    feature_mode: r.feature_mode,
                    kernel: r.kernel.clone(),
                    rate: r.rate,
                    count: 0,
                    errors: 0,
                    mean: f64::NAN,
                    std: f64::NAN,
                },
                vec![],
            ));
            rows.len() - 1
        });
        match r.rmse {
            Some(v) => rows[idx].1.push(v),
            None => rows[idx].0.errors += 1,
        }
    }
    rows.into_iter()
        .map(|(mut a, v)| {
            a.count = v.len();
            if !v.is_empty() {
                let n = v.len() as f64;
                a.mean = v.iter().sum::<f64>() / n;
                a.std = if v.len() > 1 {
                    (v.iter().map(|x| (x - a.mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
            }
            a
        })
        .collect()
}

struct Job {
    order: usize,
    kernel_label: String,
    spec: TrialSpec,
}

fn jobs(config: &SweepConfig) -> Result<Vec<Job>> {
    let mut out = Vec::new();
    let mut push = |order: usize, label: &str, kernel: Option<KernelExpr>, scheme, selection, mode, rate, seed| {
        let spec = TrialSpec {
            kernel,
            settings: config.settings.clone(),
            ..TrialSpec::new(scheme, selection, rate, mode, seed)
        };
        out.push(Job {
            order,
            kernel_label: label.to_string(),
            spec,
        });
    };
    if config.kernel_ablation {
        for (order, (label, kernel)) in ablation_variants(&config.kernel_template)?.into_iter().enumerate() {
            for &mode in &config.feature_modes {
                for &rate in &config.rates {
                    for &seed in &config.seeds {
                        push(
                            order,
                            &label,
                            Some(kernel.clone()),
                            Scheme::Gpr,
                            SelectionMethod::Random,
                            mode,
                            rate,
                            seed,
                        );
                    }
                }
            }
        }
        return Ok(out);
    }
    for &mode in &config.feature_modes {
        for &selection in &config.selections {
            for &scheme in &config.schemes {
                // the online selector is defined only through the GP posterior
                if selection == SelectionMethod::OnlineMap && scheme != Scheme::Gpr {
                    continue;
                }
                for &rate in &config.rates {
                    for &seed in &config.seeds {
                        push(0, "", None, scheme, selection, mode, rate, seed);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Runs every trial of the sweep on `dataset`; failed trials become error rows.
pub fn run_sweep_on(dataset: &Dataset, config: &SweepConfig) -> Result<EvalReport> {
    config.validate()?;
    let n = dataset.len();
    let jobs = jobs(config)?;
    let mut keyed: Vec<(usize, TrialRecord)> = jobs
        .par_iter()
        .map(|job| {
            let spec = &job.spec;
            let start = Instant::now();
            let result = run_trial(dataset, spec);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let m = training_size(spec.rate, n).unwrap_or(0);
            let (rmse, n_test, error) = match result {
                Ok(o) => (Some(o.rmse), o.n_test, None),
                Err(e) => {
                    log::warn!(
                        "trial {} {} rate={} seed={} failed: {e}",
                        spec.scheme,
                        spec.selection,
                        spec.rate,
                        spec.seed
                    );
                    (None, n.saturating_sub(m), Some(e.to_string()))
                }
            };
            (
                job.order,
                TrialRecord {
                    scheme: spec.scheme,
                    selection: spec.selection,
                    feature_mode: spec.feature_mode,
                    kernel: job.kernel_label.clone(),
                    rate: spec.rate,
                    seed: spec.seed,
                    m,
                    n_test,
                    rmse,
                    error,
                    wall_ms: Some(wall_ms),
                },
            )
        })
        .collect();
    keyed.sort_by(|(oa, a), (ob, b)| {
        oa.cmp(ob)
            .then(a.feature_mode.cmp(&b.feature_mode))
            .then(a.selection.cmp(&b.selection))
            .then(a.scheme.cmp(&b.scheme))
            .then(a.rate.total_cmp(&b.rate))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(EvalReport::from_records(keyed.into_iter().map(|(_, r)| r).collect()))
}

/// Loads or generates the dataset named by the config and runs the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<EvalReport> {
    config.validate()?;
    let dataset = config.load_dataset()?;
    if !dataset.is_fully_measured() {
        return Err(Error::InvalidParameter("sweeps need a fully measured dataset".into()));
    }
    run_sweep_on(&dataset, config)
}
