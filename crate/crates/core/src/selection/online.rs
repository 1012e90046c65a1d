//! Sequential maximum-posterior-variance selection.
//!
//! The posterior variance of every candidate is kept up to date by extending
//! the Cholesky factor of the training Gram matrix one row at a time. Row `i`
//! of `proj` holds `(L⁻¹ k(X_train, x_j))_i` for every candidate `j`, so the
//! variance is `k(x, x) − Σ_i proj[i][j]²`.

use super::random::fisher_yates_prefix;
use super::{check_budget, HyperRefit, SelectionMethod, SelectionPlan};
use crate::dataset::{squared_distance, Features};
use crate::error::{Error, Result};
use crate::gpr::{optimize_with, OptimizeOptions, JITTER_LADDER};
use crate::kernels::KernelExpr;
use crate::rng::streams;

#[derive(Debug, Clone)]
pub struct OnlineMapConfig {
    pub kernel: KernelExpr,
    pub refit: HyperRefit,
    pub restarts: usize,
    /// GP prior mean for refits; `None` uses the mean of the revealed labels.
    pub prior_mean: Option<f64>,
    /// Refits use at most this many of the labelled points (the most recent ones are dropped).
    pub max_refit_points: usize,
}

impl OnlineMapConfig {
    pub fn fixed(kernel: KernelExpr) -> Self {
        Self {
            kernel,
            refit: HyperRefit::Never,
            restarts: 5,
            prior_mean: Some(0.0),
            max_refit_points: usize::MAX,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OnlineMapRun {
    pub plan: SelectionPlan,
    /// Kernel in force when the last point was chosen.
    pub kernel: KernelExpr,
    /// Largest posterior variance over the remaining candidates, just before
    /// each argmax pick (`t = 1 .. M-1`).
    pub max_variance: Vec<f64>,
}

struct VarianceTracker<'a> {
    candidates: &'a Features,
    kernel: KernelExpr,
    self_var: f64,
    jitter: f64,
    proj: Vec<Vec<f64>>,
    variance: Vec<f64>,
}

impl<'a> VarianceTracker<'a> {
    fn new(candidates: &'a Features, kernel: KernelExpr) -> Self {
        let self_var = kernel.self_variance();
        Self {
            candidates,
            jitter: JITTER_LADDER[0] * self_var.abs(),
            self_var,
            kernel,
            proj: Vec::new(),
            variance: vec![self_var; candidates.len()],
        }
    }

    /// Extends the factor with candidate `s`.
    fn add(&mut self, s: usize) {
        let xs = self.candidates.row(s);
        let l: Vec<f64> = self.proj.iter().map(|row| row[s]).collect();
        let d2 = self.self_var + self.jitter - l.iter().map(|v| v * v).sum::<f64>();
        let d = d2.max(1e-12 * self.self_var.abs().max(f64::MIN_POSITIVE)).sqrt();
        let mut w: Vec<f64> = self
            .candidates
            .rows()
            .map(|x| self.kernel.value(squared_distance(xs, x), false))
            .collect();
        w[s] = self.self_var + self.jitter;
        for (li, row) in l.iter().zip(&self.proj) {
            if *li != 0.0 {
                for (wj, rj) in w.iter_mut().zip(row) {
                    *wj -= li * rj;
                }
            }
        }
        for (wj, vj) in w.iter_mut().zip(&mut self.variance) {
            *wj /= d;
            *vj -= *wj * *wj;
        }
        self.proj.push(w);
    }

    fn rebuild(&mut self, kernel: KernelExpr, selected: &[usize]) {
        *self = VarianceTracker::new(self.candidates, kernel);
        for &s in selected {
            self.add(s);
        }
    }

    /// Argmax over unselected candidates; ties go to the lowest index.
    fn argmax(&self, taken: &[bool]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (j, v) in self.variance.iter().enumerate() {
            if !taken[j] && *v > best.1 {
                best = (j, *v);
            }
        }
        best
    }
}

fn refit_kernel(
    cfg: &OnlineMapConfig,
    current: &KernelExpr,
    candidates: &Features,
    labels: &[f64],
    selected: &[usize],
    seed: u64,
) -> Result<KernelExpr> {
    let used = &selected[..selected.len().min(cfg.max_refit_points)];
    let x = candidates.select(used);
    let y: Vec<f64> = used.iter().map(|&i| labels[i]).collect();
    let (k, _) = optimize_with(
        &x,
        &y,
        current,
        OptimizeOptions {
            restarts: cfg.restarts.max(1),
            seed,
            prior_mean: cfg.prior_mean.unwrap_or_else(|| y.iter().sum::<f64>() / y.len() as f64),
            ..OptimizeOptions::default()
        },
    )?;
    Ok(k)
}

/// Runs online selection and returns the plan with diagnostics.
pub fn run_online_map(
    candidates: &Features,
    m: usize,
    cfg: &OnlineMapConfig,
    seed: u64,
    labels: Option<&[f64]>,
) -> Result<OnlineMapRun> {
    let n = candidates.len();
    check_budget(m, n)?;
    if cfg.refit.needs_labels() && labels.is_none() {
        return Err(Error::Selection(
            "hyperparameter refitting needs measured labels".into(),
        ));
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: l.len(),
            });
        }
    }

    let initial = match cfg.refit {
        HyperRefit::Once { after } => after.clamp(1, m),
        _ => 1,
    };
    let mut selected = fisher_yates_prefix(n, initial, seed, streams::SELECTION);
    let mut taken = vec![false; n];
    selected.iter().for_each(|&i| taken[i] = true);

    let mut kernel = cfg.kernel.clone();
    if let (HyperRefit::Once { .. }, Some(l)) = (cfg.refit, labels) {
        kernel = refit_kernel(cfg, &kernel, candidates, l, &selected, seed)?;
    }
    let mut tracker = VarianceTracker::new(candidates, kernel.clone());
    for &s in &selected {
        tracker.add(s);
    }

    let mut max_variance = Vec::with_capacity(m);
    while selected.len() < m {
        let t = selected.len();
        if let (HyperRefit::Every(p), Some(l)) = (cfg.refit, labels) {
            if t.is_multiple_of(p) {
                kernel = refit_kernel(cfg, &kernel, candidates, l, &selected, seed.wrapping_add(t as u64))?;
                tracker.rebuild(kernel.clone(), &selected);
            }
        }
        let (pick, var) = tracker.argmax(&taken);
        max_variance.push(var);
        taken[pick] = true;
        selected.push(pick);
        tracker.add(pick);
    }

    Ok(OnlineMapRun {
        plan: SelectionPlan {
            method: SelectionMethod::OnlineMap,
            ordered_indices: selected,
            seed,
            hyper_refit: cfg.refit,
            kernel: Some(kernel.to_string()),
        },
        kernel,
        max_variance,
    })
}

/// Online maximum-posterior-variance selection of `m` candidates.
pub fn select_online_map(
    candidates: &Features,
    m: usize,
    cfg: &OnlineMapConfig,
    seed: u64,
    labels: Option<&[f64]>,
) -> Result<SelectionPlan> {
    run_online_map(candidates, m, cfg, seed, labels).map(|r| r.plan)
}
