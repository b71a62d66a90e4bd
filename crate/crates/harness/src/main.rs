use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use pbrff::data::{load_csv, split, standardize, SplitSpec};
use pbrff::fourier::GaussianPrior;
use pbrff::landmarks::{fit_landmark_model, landmark_bound_report, select_landmarks_kmeans, LandmarkSelection};

use pbrff_harness::config::{ExperimentConfig, Pipeline};
use pbrff_harness::greedy::run_greedy_curves;
use pbrff_harness::landmarks_table::run_landmarks_table;
use pbrff_harness::model::mix_seed;
use pbrff_harness::results::{write_bounds_jsonl, BoundRecord};
use pbrff_harness::toy::run_toy_landmarks;

/// Experiment runner for pseudo-Bayesian random Fourier feature models.
#[derive(Parser)]
#[command(name = "pbrff", version, about)]
struct Cli {
    /// Experiment configuration (JSON or TOML); defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap worker-thread parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Full-scale settings (large pools and synthetic sets); slow.
    #[arg(long, global = true)]
    full: bool,
    /// Output directory override.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Five-landmark similarity surfaces and decision grids on a 2-D set.
    Toy,
    /// Per-method test-error table plus the landmark-count sweep.
    Landmarks,
    /// Resampled-feature learning curves against the plain baseline.
    Greedy,
    /// Generalization-bound reports for a fitted landmark model.
    Bounds,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = serde_json::json!({
                "error": format!("{err:#}"),
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if cli.full {
        cfg.scale_up();
    }
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(output) = cli.output {
        cfg.output_dir = output;
    }
    match cli.command {
        Command::Toy => {
            cfg.pipeline = Pipeline::ToyLandmarks;
            let rows = run_toy_landmarks(&cfg)?;
            summarize(&rows);
        }
        Command::Landmarks => {
            cfg.pipeline = Pipeline::LandmarksTable;
            if cfg.dataset.is_none() {
                cfg.dataset = Some(PathBuf::from("data/breast.csv"));
                cfg.label_column = 30;
            }
            let outcome = run_landmarks_table(&cfg)?;
            summarize(&outcome.rows);
        }
        Command::Greedy => {
            cfg.pipeline = Pipeline::GreedyCurves;
            let outcome = run_greedy_curves(&cfg)?;
            summarize(&outcome.rows);
        }
        Command::Bounds => run_bounds(&cfg)?,
    }
    Ok(())
}

fn summarize(rows: &[pbrff_harness::results::ResultRow]) {
    for row in rows {
        println!(
            "{} {} seed={} test_error={:.4}",
            row.pipeline, row.method, row.seed, row.test_error
        );
    }
}

/// Fit one pseudo-posterior landmark model per seed and emit every
/// per-landmark bound evaluation as JSON lines.
fn run_bounds(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let dataset_path = cfg
        .dataset
        .clone()
        .unwrap_or_else(|| PathBuf::from("data/breast.csv"));
    let label_column = if cfg.dataset.is_none() { 30 } else { cfg.label_column };
    let dataset_name = dataset_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let ds = load_csv(&dataset_path, label_column, cfg.has_header)?;
    let sigma = cfg.sigma.unwrap_or(1.0);
    let beta = cfg.beta_grid.first().copied().unwrap_or(1.0);
    let d = cfg.d_grid.first().copied().unwrap_or(64);

    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let spec = SplitSpec::new(
            cfg.train_fraction,
            cfg.valid_fraction,
            cfg.test_fraction,
            seed,
        )?;
        let (train_raw, valid_raw, test_raw) = split(&ds, &spec)?;
        let (train, _, _) = standardize(&train_raw, &[&valid_raw, &test_raw]);
        let n_landmarks = ((cfg.landmark_fraction * train.n() as f64).ceil() as usize).max(1);
        let landmarks = select_landmarks_kmeans(&train, n_landmarks, mix_seed(seed, 2), 50)?;
        let prior = GaussianPrior::new(sigma, train.dim())?;
        let model = fit_landmark_model(
            &train,
            landmarks,
            &prior,
            d,
            beta,
            mix_seed(seed, 3),
            LandmarkSelection::KMeans,
            false,
        )?;
        let t = beta * (train.n() as f64).sqrt();
        for (l, report) in landmark_bound_report(&model, &train, t, cfg.eps)?
            .into_iter()
            .enumerate()
        {
            records.push(BoundRecord {
                pipeline: "bounds".into(),
                dataset: dataset_name.clone(),
                method: "PB".into(),
                seed,
                landmark: Some(l),
                report,
            });
        }
    }
    write_bounds_jsonl(&cfg.output_dir.join("bounds.jsonl"), &records)?;
    println!("wrote {} bound records", records.len());
    Ok(())
}
