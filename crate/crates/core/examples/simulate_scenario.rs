//! Generates the default urban scenario and summarizes its fields.
//!
//! `cargo run --example simulate_scenario -- [seed]`

use radiomap::dataset::compute_residuals;
use radiomap::scenario::{generate_dataset, generate_scenario, ScenarioConfig};

fn main() -> radiomap::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let scenario = generate_scenario(&ScenarioConfig::default(), seed)?;
    let dataset = generate_dataset(&scenario)?;
    let tx = scenario.transmitter.position;
    println!("buildings: {}", scenario.buildings.len());
    println!("transmitter: ({:.1}, {:.1}, {:.1})", tx.x, tx.y, tx.z);
    println!("candidate points: {}", dataset.len());

    let sim = dataset.gamma_sim();
    let (lo, hi) = sim
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("simulated RSRP: {lo:.1} .. {hi:.1} dB");

    let r = compute_residuals(&dataset)?;
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let std = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
    println!("residual mean {mean:.2} dB, std {std:.2} dB");
    Ok(())
}
