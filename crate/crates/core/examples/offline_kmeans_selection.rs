//! K-means selection compared with random selection by coverage.

use radiomap::dataset::{squared_distance, standardized_features, Features};
use radiomap::scenario::{generate_dataset, generate_scenario, ScenarioConfig};
use radiomap::selection::{kmeans_cluster, select_offline_kmeans, select_random, KMEANS_MAX_ITERS, KMEANS_TOL};

/// Mean distance from every candidate to its nearest selected point.
fn coverage(f: &Features, picked: &[usize]) -> f64 {
    let total: f64 = f
        .rows()
        .map(|x| {
            picked
                .iter()
                .map(|&i| squared_distance(x, f.row(i)))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    total / f.len() as f64
}

fn main() -> radiomap::Result<()> {
    let dataset = generate_dataset(&generate_scenario(&ScenarioConfig::default(), 0)?)?;
    let (features, _) = standardized_features(&dataset)?;
    let m = 84;

    let state = kmeans_cluster(&features, m, 0, KMEANS_MAX_ITERS, KMEANS_TOL)?;
    println!("k-means: {} iterations, inertia {:.2}", state.iterations, state.inertia);

    let km = select_offline_kmeans(&features, m, 0)?;
    let rnd = select_random(features.len(), m, 0)?;
    println!("coverage k-means: {:.3}", coverage(&features, &km.ordered_indices));
    println!("coverage random:  {:.3}", coverage(&features, &rnd.ordered_indices));
    print!("{}", km.to_csv().lines().take(8).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
