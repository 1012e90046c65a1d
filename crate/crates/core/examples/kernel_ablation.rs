//! Compares the twelve kernel variants by held-out RMSE at one sampling rate.

use radiomap::dataset::FeatureMode;
use radiomap::eval::{run_sweep_on, SweepConfig};
use radiomap::scenario::{generate_dataset, generate_scenario, ScenarioConfig};

fn main() -> radiomap::Result<()> {
    let dataset = generate_dataset(&generate_scenario(&ScenarioConfig::default(), 0)?)?
        .with_feature_mode(FeatureMode::PositionPlusSim);
    let config = SweepConfig {
        kernel_ablation: true,
        rates: vec![0.05],
        seeds: vec![0, 1],
        ..SweepConfig::default()
    };
    let report = run_sweep_on(&dataset, &config)?;
    let mut rows = report.aggregates.clone();
    rows.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    for row in rows {
        println!(
            "{:<28} {:>7.3} dB  (std {:.3}, {} failed)",
            row.kernel, row.mean, row.std, row.errors
        );
    }
    Ok(())
}
