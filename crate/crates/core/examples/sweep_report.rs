//! Runs a small sweep and writes CSV tables and SVG plots to a directory.
//!
//! `cargo run --release --example sweep_report -- [out_dir]`

use std::path::PathBuf;

use radiomap::eval::{emit_report, run_sweep, Scheme, SweepConfig};
use radiomap::selection::SelectionMethod;

fn main() -> radiomap::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweep_out".into()));
    let config = SweepConfig {
        rates: vec![0.02, 0.05, 0.10],
        schemes: Scheme::ALL.to_vec(),
        selections: vec![SelectionMethod::Random, SelectionMethod::OfflineKmeans],
        seeds: vec![0, 1],
        ..SweepConfig::default()
    };
    let report = run_sweep(&config)?;
    for row in &report.aggregates {
        println!(
            "{:<8} {:<15} rate {:.2}: {:.2} ± {:.2} dB",
            row.scheme.as_str(),
            row.selection.as_str(),
            row.rate,
            row.mean,
            row.std
        );
    }
    let files = emit_report(&report, &dir, true)?;
    println!("wrote {} files to {}", files.written.len(), dir.display());
    Ok(())
}
