//! Sequential max-variance selection, with frozen and refitted hyperparameters.

use radiomap::dataset::{compute_residuals, standardized_features};
use radiomap::kernels::parse_kernel;
use radiomap::scenario::{generate_dataset, generate_scenario, ScenarioConfig};
use radiomap::selection::{run_online_map, HyperRefit, OnlineMapConfig};

fn main() -> radiomap::Result<()> {
    let dataset = generate_dataset(&generate_scenario(&ScenarioConfig::default(), 0)?)?;
    let (features, _) = standardized_features(&dataset)?;
    let m = 60;

    // frozen hyperparameters: the sequence never looks at a measurement
    let fixed = OnlineMapConfig::fixed(parse_kernel("const(1) * matern(l=0.5,nu=1.5) + white(0.05)")?);
    let run = run_online_map(&features, m, &fixed, 0, None)?;
    println!("first picks: {:?}", &run.plan.ordered_indices[..8]);
    for t in [0, 9, 19, 39, m - 2] {
        println!("pick {:>2}: max posterior variance {:.4}", t + 2, run.max_variance[t]);
    }

    // random initial batch, one refit on its residuals, then max-variance
    let residuals = compute_residuals(&dataset)?;
    let cfg = OnlineMapConfig {
        refit: HyperRefit::initial_batch(m),
        ..fixed
    };
    let run = run_online_map(&features, m, &cfg, 0, Some(&residuals))?;
    println!("refit {} -> kernel {}", run.plan.hyper_refit, run.kernel);
    Ok(())
}
