//! Saves a fitted GP with its feature scaler and reloads it.

use radiomap::dataset::{compute_residuals, standardized_features};
use radiomap::gpr::{gpr_fit, load_model, save_model};
use radiomap::kernels::parse_kernel;
use radiomap::scenario::{generate_dataset, generate_scenario, ScenarioConfig};
use radiomap::selection::select_random;

fn main() -> radiomap::Result<()> {
    let dataset = generate_dataset(&generate_scenario(&ScenarioConfig::default(), 3)?)?;
    let (features, scaler) = standardized_features(&dataset)?;
    let residuals = compute_residuals(&dataset)?;
    let plan = select_random(dataset.len(), 100, 0)?;
    let y: Vec<f64> = plan.ordered_indices.iter().map(|&i| residuals[i]).collect();
    let kernel = parse_kernel("const(30) * matern(l=0.4,nu=1.5) + white(1)")?;
    let model = gpr_fit(&features.select(&plan.ordered_indices), &y, &kernel, None)?;

    let text = save_model(&model, &scaler)?;
    println!("artifact: {} bytes", text.len());
    let (restored, restored_scaler) = load_model(&text)?;

    let query = restored_scaler.apply(&dataset.features())?;
    let a = model.predict_mean(&features)?;
    let b = restored.predict_mean(&query)?;
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("kernel after reload: {}", restored.kernel());
    println!("largest prediction difference: {worst:.3e} dB");
    Ok(())
}
