//! IDW, KNN and ordinary kriging on residuals, scored against held-out points.

use radiomap::baselines::{
    fit_variogram, idw_predict, knn_predict, kriging_predict, IdwConfig, KnnConfig, VariogramFamily,
};
use radiomap::dataset::{compute_residuals, standardized_features};
use radiomap::eval::rmse;
use radiomap::scenario::{generate_dataset, generate_scenario, ScenarioConfig};
use radiomap::selection::select_random;

fn main() -> radiomap::Result<()> {
    let dataset = generate_dataset(&generate_scenario(&ScenarioConfig::default(), 0)?)?;
    let (features, _) = standardized_features(&dataset)?;
    let residuals = compute_residuals(&dataset)?;

    let plan = select_random(dataset.len(), dataset.len() / 10, 1)?;
    let mask = plan.mask(dataset.len());
    let test: Vec<usize> = (0..dataset.len()).filter(|&i| !mask[i]).collect();
    let train = features.select(&plan.ordered_indices);
    let y: Vec<f64> = plan.ordered_indices.iter().map(|&i| residuals[i]).collect();
    let query = features.select(&test);
    let truth: Vec<f64> = test.iter().map(|&i| residuals[i]).collect();

    let idw = idw_predict(&train, &y, &query, &IdwConfig::default())?;
    let knn = knn_predict(&train, &y, &query, &KnnConfig::default())?;
    let vg = fit_variogram(&train, &y, VariogramFamily::Exponential, 15)?;
    println!(
        "variogram: nugget {:.2}, sill {:.2}, range {:.3}",
        vg.nugget, vg.sill, vg.range
    );
    let kriged = kriging_predict(&train, &y, &vg, &query)?;

    println!("IDW     RMSE {:.2} dB", rmse(&idw, &truth)?);
    println!("KNN     RMSE {:.2} dB", rmse(&knn, &truth)?);
    println!("kriging RMSE {:.2} dB", rmse(&kriged.mean, &truth)?);
    Ok(())
}
