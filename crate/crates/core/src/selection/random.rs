use rand::Rng as _;

use super::{check_budget, HyperRefit, SelectionMethod, SelectionPlan};
use crate::error::Result;
use crate::rng::{seeded, streams};

/// First `m` entries of a seeded Fisher–Yates shuffle of `0..n`.
pub(crate) fn fisher_yates_prefix(n: usize, m: usize, seed: u64, stream: u64) -> Vec<usize> {
    let mut rng = seeded(seed, stream);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx
}

/// Uniform sample of `m` out of `n` candidates without replacement.
pub fn select_random(n: usize, m: usize, seed: u64) -> Result<SelectionPlan> {
    check_budget(m, n)?;
    Ok(SelectionPlan {
        method: SelectionMethod::Random,
        ordered_indices: fisher_yates_prefix(n, m, seed, streams::SELECTION),
        seed,
        hyper_refit: HyperRefit::Never,
        kernel: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_budget_is_permutation() {
        let p = select_random(25, 25, 3).unwrap();
        let mut s = p.ordered_indices.clone();
        s.sort_unstable();
        assert_eq!(s, (0..25).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_plan() {
        assert_eq!(select_random(100, 10, 9).unwrap(), select_random(100, 10, 9).unwrap());
        assert_ne!(select_random(100, 10, 9).unwrap(), select_random(100, 10, 10).unwrap());
    }

    #[test]
    fn budget_errors() {
        assert!(select_random(5, 6, 0).is_err());
        assert!(select_random(5, 0, 0).is_err());
    }

    #[test]
    fn single_draw_is_uniform() {
        // binomial(10⁴, 1/10): mean 1000, σ = 30
        let draws = 10_000;
        let mut counts = [0usize; 10];
        for seed in 0..draws {
            counts[select_random(10, 1, seed).unwrap().ordered_indices[0]] += 1;
        }
        let p = 0.1;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }
}
