//! Fits a GP to residuals at 5% of the points and recovers the full map.

use radiomap::dataset::{compute_residuals, standardized_features};
use radiomap::eval::rmse;
use radiomap::gpr::{gpr_fit, optimize_with, predict_rsrp_map, OptimizeOptions};
use radiomap::kernels::default_composite;
use radiomap::scenario::{generate_dataset, generate_scenario, ScenarioConfig};
use radiomap::selection::select_random;

fn main() -> radiomap::Result<()> {
    let dataset = generate_dataset(&generate_scenario(&ScenarioConfig::default(), 0)?)?;
    let (features, scaler) = standardized_features(&dataset)?;
    let residuals = compute_residuals(&dataset)?;

    let m = dataset.len() / 20;
    let plan = select_random(dataset.len(), m, 7)?;
    let train = features.select(&plan.ordered_indices);
    let y: Vec<f64> = plan.ordered_indices.iter().map(|&i| residuals[i]).collect();

    let (kernel, lml) = optimize_with(&train, &y, &default_composite(), OptimizeOptions::default())?;
    println!("fitted kernel: {kernel}");
    println!("log marginal likelihood: {lml:.2}");

    let model = gpr_fit(&train, &y, &kernel, None)?;
    let recovered = predict_rsrp_map(&model, &dataset, &scaler)?;
    let truth = dataset.gamma_meas()?;
    let mask = plan.mask(dataset.len());
    let held_out = |v: &[f64]| -> Vec<f64> { v.iter().zip(&mask).filter(|(_, &m)| !m).map(|(x, _)| *x).collect() };
    println!(
        "simulation only RMSE: {:.2} dB",
        rmse(&held_out(&dataset.gamma_sim()), &held_out(&truth))?
    );
    println!(
        "GP recovered RMSE:    {:.2} dB",
        rmse(&held_out(&recovered), &held_out(&truth))?
    );

    let post = model.predict(&features.select(&[0, 1, 2]))?;
    for (i, (mu, var)) in post.mean.iter().zip(&post.variance).enumerate() {
        println!("point {i}: residual {mu:+.2} dB, posterior std {:.2} dB", var.sqrt());
    }
    Ok(())
}
