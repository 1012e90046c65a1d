//! Marginal-likelihood maximization over log-hyperparameters.
//!
//! Projected BFGS with Armijo backtracking inside the log-space box, run
//! from the template values and from `restarts - 1` log-uniform draws.

use rand::Rng as _;

use super::GprModel;
use crate::dataset::Features;
use crate::error::{Error, Result};
use crate::kernels::KernelExpr;
use crate::rng::{seeded, streams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub seed: u64,
    pub prior_mean: f64,
    pub max_iters: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            prior_mean: 0.0,
            max_iters: 100,
        }
    }
}

/// Returns the kernel with the highest log marginal likelihood found.
pub fn optimize_hyperparameters(
    train: &Features,
    targets: &[f64],
    template: &KernelExpr,
    restarts: usize,
    seed: u64,
) -> Result<KernelExpr> {
    optimize_with(
        train,
        targets,
        template,
        OptimizeOptions {
            restarts,
            seed,
            ..OptimizeOptions::default()
        },
    )
    .map(|(k, _)| k)
}

/// Like [`optimize_hyperparameters`], also returning the achieved LML.
pub fn optimize_with(
    train: &Features,
    targets: &[f64],
    template: &KernelExpr,
    opts: OptimizeOptions,
) -> Result<(KernelExpr, f64)> {
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    let objective = Objective {
        train,
        targets,
        template,
        prior_mean: opts.prior_mean,
    };
    let bounds = template.log_bounds();
    let mut rng = seeded(opts.seed, streams::HYPER_RESTARTS);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut last_err = None;
    for r in 0..opts.restarts {
        let start: Vec<f64> = if r == 0 {
            template.log_params()
        } else {
            bounds.iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect()
        };
        match minimize(&objective, start, &bounds, opts.max_iters) {
            Ok((theta, f)) => {
                if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
                    best = Some((theta, f));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((theta, f)) => Ok((template.with_log_params(&theta)?, -f)),
        None => Err(last_err.unwrap_or(Error::Conditioning {
            n: train.len(),
            jitter: f64::NAN,
        })),
    }
}

struct Objective<'a> {
    train: &'a Features,
    targets: &'a [f64],
    template: &'a KernelExpr,
    prior_mean: f64,
}

impl Objective<'_> {
    /// Negative LML and its gradient.
    fn eval(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let kernel = self.template.with_log_params(theta)?;
        let model = GprModel::fit(self.train, self.targets, &kernel, self.prior_mean, None)?;
        let (v, g) = model.log_marginal_likelihood();
        if !v.is_finite() {
            return Err(Error::Conditioning {
                n: self.train.len(),
                jitter: model.jitter(),
            });
        }
        Ok((-v, g.into_iter().map(|x| -x).collect()))
    }
}

fn project(theta: &mut [f64], bounds: &[(f64, f64)]) {
    for (t, (lo, hi)) in theta.iter_mut().zip(bounds) {
        *t = t.clamp(*lo, *hi);
    }
}

/// Components pinned at a bound with the gradient pointing outward.
fn active_set(theta: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<bool> {
    theta
        .iter()
        .zip(g)
        .zip(bounds)
        .map(|((t, gi), (lo, hi))| (*t <= *lo && *gi > 0.0) || (*t >= *hi && *gi < 0.0))
        .collect()
}

fn minimize(
    obj: &Objective<'_>,
    mut theta: Vec<f64>,
    bounds: &[(f64, f64)],
    max_iters: usize,
) -> Result<(Vec<f64>, f64)> {
    const MAX_STEP: f64 = 2.0;
    project(&mut theta, bounds);
    let (mut f, mut g) = obj.eval(&theta)?;
    let n = theta.len();
    let mut h = identity(n);

    for _ in 0..max_iters {
        let active = active_set(&theta, &g, bounds);
        let pg_norm = g
            .iter()
            .zip(&active)
            .filter(|(_, a)| !**a)
            .fold(0.0f64, |m, (gi, _)| m.max(gi.abs()));
        if pg_norm < 1e-6 {
            break;
        }
        let mut d = direction(&h, &g, &active);
        if dot(&d, &g) >= 0.0 {
            h = identity(n);
            d = direction(&h, &g, &active);
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dmax > MAX_STEP {
            d.iter_mut().for_each(|v| *v *= MAX_STEP / dmax);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut trial: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di).collect();
            project(&mut trial, bounds);
            let moved: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &moved);
            if let Ok((ft, gt)) = obj.eval(&trial) {
                if ft <= f + 1e-4 * decrease.min(0.0) && ft <= f {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((new_theta, new_f, new_g)) = accepted else {
            break;
        };
        let s: Vec<f64> = new_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 {
            bfgs_update(&mut h, &s, &y, sy);
        }
        let converged = (f - new_f).abs() <= 1e-10 * (1.0 + f.abs());
        theta = new_theta;
        f = new_f;
        g = new_g;
        if converged {
            break;
        }
    }
    Ok((theta, f))
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn direction(h: &[Vec<f64>], g: &[f64], active: &[bool]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if active[i] {
                0.0
            } else {
                -(0..n).filter(|j| !active[*j]).map(|j| h[i][j] * g[j]).sum::<f64>()
            }
        })
        .collect()
}

/// Inverse-Hessian BFGS update.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpr::gpr_fit;
    use crate::kernels::{composite_kernel, default_composite, gram_matrix, KernelBounds};
    use crate::linalg::Cholesky;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    /// Draws targets from a GP prior with the given kernel.
    pub(crate) fn sample_gp(kernel: &KernelExpr, x: &Features, seed: u64) -> Vec<f64> {
        let mut k = gram_matrix(kernel, x, x, true).unwrap();
        k.add_diag(1e-10);
        let c = Cholesky::factor(&k).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        c.l().mul_vec(&z)
    }

    fn uniform_features(n: usize, d: usize, side: f64, seed: u64) -> Features {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Features::new(d, (0..n * d).map(|_| rng.random_range(0.0..side)).collect()).unwrap()
    }

    #[test]
    fn never_worse_than_template() {
        let x = uniform_features(40, 2, 3.0, 1);
        let truth = composite_kernel(2.0, 0.5, 1.5, 0.1, KernelBounds::default()).unwrap();
        let y = sample_gp(&truth, &x, 2);
        let template = default_composite();
        let before = gpr_fit(&x, &y, &template, None).unwrap().log_marginal_likelihood().0;
        let (k, after) = optimize_with(
            &x,
            &y,
            &template,
            OptimizeOptions {
                restarts: 3,
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(after >= before - 1e-9);
        let refit = gpr_fit(&x, &y, &k, None).unwrap().log_marginal_likelihood().0;
        assert!((refit - after).abs() < 1e-6);
    }

    #[test]
    fn template_at_optimum_is_kept() {
        let x = uniform_features(30, 2, 3.0, 5);
        let truth = composite_kernel(2.0, 0.5, 1.5, 0.1, KernelBounds::default()).unwrap();
        let y = sample_gp(&truth, &x, 6);
        let (opt, lml) = optimize_with(
            &x,
            &y,
            &default_composite(),
            OptimizeOptions {
                restarts: 4,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let (again, lml2) = optimize_with(
            &x,
            &y,
            &opt,
            OptimizeOptions {
                restarts: 1,
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(lml2 >= lml - 1e-9);
        for (a, b) in again.log_params().iter().zip(opt.log_params()) {
            assert!((a - b).abs() < 1e-2, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_targets_improve_monotonically() {
        let x = uniform_features(20, 2, 3.0, 8);
        let y = vec![0.0; 20];
        let template = default_composite();
        let before = gpr_fit(&x, &y, &template, None).unwrap().log_marginal_likelihood().0;
        let (k, after) = optimize_with(
            &x,
            &y,
            &template,
            OptimizeOptions {
                restarts: 2,
                seed: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(after >= before);
        // all variance is pushed to the lower bounds
        let hp = k.hyperparams();
        assert!(hp[0].value < 1e-2 && hp[2].value < 1e-3, "{k}");
    }

    #[test]
    fn zero_restarts_rejected() {
        let x = uniform_features(5, 2, 1.0, 0);
        assert!(optimize_hyperparameters(&x, &[0.0; 5], &default_composite(), 0, 0).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let x = uniform_features(25, 2, 3.0, 3);
        let y = sample_gp(&default_composite(), &x, 3);
        let a = optimize_hyperparameters(&x, &y, &default_composite(), 3, 17).unwrap();
        let b = optimize_hyperparameters(&x, &y, &default_composite(), 3, 17).unwrap();
        assert_eq!(a, b);
    }
}
