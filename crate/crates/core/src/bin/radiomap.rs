use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radiomap::dataset::{load_dataset, FeatureMode};
use radiomap::eval::{
    emit_report, predict_with_plan, read_results_csv, run_sweep, select_for_dataset, training_size, EvalReport, Scheme,
    SchemeSettings, SweepConfig,
};
use radiomap::scenario::{generate_dataset, generate_scenario, ScenarioConfig};
use radiomap::selection::{SelectionMethod, SelectionPlan};
use radiomap::{Error, Result};

#[derive(Parser)]
#[command(
    name = "radiomap",
    version,
    about = "3D radio map recovery from sparse RSRP measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario and write its dataset CSV.
    Simulate {
        /// Scenario config JSON; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the building footprints as CSV.
        #[arg(long)]
        buildings: Option<PathBuf>,
    },
    /// Choose which candidates to measure.
    Select {
        /// random, kmeans or map
        #[arg(long)]
        method: SelectionMethod,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "position_plus_sim")]
        features: FeatureMode,
        /// Scheme settings JSON (GP kernel and search options).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Recover RSRP at every candidate from the measurements named by a plan.
    Predict {
        /// gpr, idw, knn or kriging
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "position_plus_sim")]
        features: FeatureMode,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a grid of trials and write the report.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Rebuild aggregates and plot data from an existing results.csv.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        svg: bool,
    },
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            buildings,
        } => {
            let cfg: ScenarioConfig = read_json(config.as_deref())?;
            let scenario = generate_scenario(&cfg, seed)?;
            let dataset = generate_dataset(&scenario)?;
            fs::write(&out, dataset.to_csv())?;
            if let Some(b) = buildings {
                fs::write(b, scenario.buildings_csv())?;
            }
            log::info!("wrote {} samples to {}", dataset.len(), out.display());
        }
        Command::Select {
            method,
            rate,
            seed,
            data,
            out,
            features,
            config,
        } => {
            let settings: SchemeSettings = read_json(config.as_deref())?;
            let dataset = load_dataset(&fs::read_to_string(&data)?, features)?;
            let m = training_size(rate, dataset.len())?;
            let plan = select_for_dataset(&dataset, method, m, seed, &settings)?;
            fs::write(&out, plan.to_csv())?;
        }
        Command::Predict {
            scheme,
            plan,
            data,
            out,
            features,
            config,
        } => {
            let settings: SchemeSettings = read_json(config.as_deref())?;
            let dataset = load_dataset(&fs::read_to_string(&data)?, features)?;
            let plan = SelectionPlan::from_csv(&fs::read_to_string(&plan)?)?;
            let predicted = predict_with_plan(&dataset, &plan, scheme, &settings)?;
            let mut text = String::from("x,y,z,rsrp_sim,rsrp_pred\n");
            for (s, p) in dataset.samples().iter().zip(&predicted) {
                let q = s.position;
                let _ = writeln!(text, "{},{},{},{},{}", q.x, q.y, q.z, s.gamma_sim, p);
            }
            fs::write(&out, text)?;
        }
        Command::Sweep { config, out_dir, svg } => {
            let cfg: SweepConfig = serde_json::from_str(&fs::read_to_string(&config)?)?;
            let report = run_sweep(&cfg)?;
            let failed = report.records.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                log::warn!("{failed} of {} trials failed; see results.csv", report.records.len());
            }
            emit_report(&report, &out_dir, svg)?;
        }
        Command::Report { input, svg } => {
            let path = input.join("results.csv");
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
            let report = EvalReport::from_records(read_results_csv(&text)?);
            emit_report(&report, &input, svg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("radiomap: error: {e}");
            ExitCode::FAILURE
        }
    }
}
