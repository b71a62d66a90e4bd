use std::time::Instant;

use anyhow::{Context, Result};
use ndarray::Array2;

use pbrff::data::{load_csv, split, standardize, LabeledDataset, SplitSpec};
use pbrff::fourier::GaussianPrior;
use pbrff::landmarks::{
    fit_landmark_model, landmark_bound_report, psi_map_matrix, rbf_landmark_map_matrix,
    select_landmarks_kmeans, select_landmarks_random, LandmarkModel, LandmarkSelection,
};
use pbrff::svm::error_rate;

use crate::config::ExperimentConfig;
use crate::model::{fit_svm_validated, mix_seed, select_sigma};
use crate::results::{write_bounds_jsonl, write_results_csv, BoundRecord, ResultRow};

const PROXY_D: usize = 2048;
const KMEANS_ITERS: usize = 50;

pub struct TableOutcome {
    pub rows: Vec<ResultRow>,
    pub bounds: Vec<BoundRecord>,
}

struct Splits {
    train: LabeledDataset,
    valid: LabeledDataset,
    test: LabeledDataset,
}

pub fn run_landmarks_table(cfg: &ExperimentConfig) -> Result<TableOutcome> {
    cfg.validate()?;
    let dataset_path = cfg
        .dataset
        .as_ref()
        .context("landmarks_table needs a dataset path")?;
    let dataset_name = dataset_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let ds = load_csv(dataset_path, cfg.label_column, cfg.has_header)?;

    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    for &seed in &cfg.seeds {
        let spec = SplitSpec::new(
            cfg.train_fraction,
            cfg.valid_fraction,
            cfg.test_fraction,
            seed,
        )?;
        let (train_raw, valid_raw, test_raw) = split(&ds, &spec)?;
        let (train, mut others, _) = standardize(&train_raw, &[&valid_raw, &test_raw]);
        let test = others.pop().unwrap();
        let valid = others.pop().unwrap();
        let splits = Splits { train, valid, test };

        let sigma = match cfg.sigma {
            Some(s) => s,
            None => select_sigma(
                &splits.train,
                &splits.valid,
                &cfg.sigma_grid,
                PROXY_D,
                1.0,
                cfg.epochs,
                mix_seed(seed, 1),
            )?,
        };
        let n_landmarks =
            ((cfg.landmark_fraction * splits.train.n() as f64).ceil() as usize).max(1);
        let landmarks = select_landmarks_kmeans(
            &splits.train,
            n_landmarks,
            mix_seed(seed, 2),
            KMEANS_ITERS,
        )?;

        // Kernel-SVM stand-in at the chosen width: a linear SVM on a
        // large random feature map over the raw coordinates.
        rows.push(proxy_method(cfg, &dataset_name, &splits, sigma, seed)?);

        // RBF baseline: fixed per-landmark kernel values, C validated.
        rows.push(rbf_method(cfg, &dataset_name, &splits, &landmarks, sigma, seed)?);

        // Pseudo-posterior methods differ only in which grids they sweep.
        let methods: [(&str, &[f64], &[usize]); 3] = [
            ("PB", &cfg.beta_grid, &cfg.d_grid),
            ("PB_beta1", &[1.0], &cfg.d_grid),
            ("PB_D64", &cfg.beta_grid, &[64]),
        ];
        for (method, beta_grid, d_grid) in methods {
            let (row, model) = pb_method(
                cfg,
                &dataset_name,
                method,
                &splits,
                &landmarks,
                sigma,
                beta_grid,
                d_grid,
                seed,
            )?;
            let t = model.beta() * (splits.train.n() as f64).sqrt();
            for (l, report) in landmark_bound_report(&model, &splits.train, t, cfg.eps)?
                .into_iter()
                .enumerate()
            {
                bounds.push(BoundRecord {
                    pipeline: "landmarks_table".into(),
                    dataset: dataset_name.clone(),
                    method: method.into(),
                    seed,
                    landmark: Some(l),
                    report,
                });
            }
            rows.push(row);
        }

        if cfg.run_sweep {
            rows.extend(landmark_sweep(cfg, &dataset_name, &splits, sigma, seed)?);
        }
    }

    write_results_csv(&cfg.output_dir.join("results.csv"), &rows)?;
    write_bounds_jsonl(&cfg.output_dir.join("bounds.jsonl"), &bounds)?;
    Ok(TableOutcome { rows, bounds })
}

fn proxy_method(
    cfg: &ExperimentConfig,
    dataset: &str,
    splits: &Splits,
    sigma: f64,
    seed: u64,
) -> Result<ResultRow> {
    let start = Instant::now();
    let prior = GaussianPrior::new(sigma, splits.train.dim())?;
    let freqs = pbrff::fourier::sample_frequencies(&prior, PROXY_D, mix_seed(seed, 7))?;
    let map_train = pbrff::fourier::rff_map_matrix(splits.train.features(), &freqs)?;
    let map_valid = pbrff::fourier::rff_map_matrix(splits.valid.features(), &freqs)?;
    let map_test = pbrff::fourier::rff_map_matrix(splits.test.features(), &freqs)?;
    let mut row = mapped_row(
        cfg,
        dataset,
        "SVM-RFF-proxy",
        splits,
        &map_train,
        &map_valid,
        &map_test,
        sigma,
        None,
        Some(PROXY_D),
        0,
        "none",
        seed,
        start,
    )?;
    row.n_landmarks = None;
    row.landmark_fraction = None;
    row.selection = None;
    Ok(row)
}

fn rbf_method(
    cfg: &ExperimentConfig,
    dataset: &str,
    splits: &Splits,
    landmarks: &[pbrff::landmarks::Landmark],
    sigma: f64,
    seed: u64,
) -> Result<ResultRow> {
    let start = Instant::now();
    let map_train = rbf_landmark_map_matrix(landmarks, sigma, splits.train.features());
    let map_valid = rbf_landmark_map_matrix(landmarks, sigma, splits.valid.features());
    let map_test = rbf_landmark_map_matrix(landmarks, sigma, splits.test.features());
    mapped_row(
        cfg,
        dataset,
        "RBF-Landmarks",
        splits,
        &map_train,
        &map_valid,
        &map_test,
        sigma,
        None,
        None,
        landmarks.len(),
        "kmeans",
        seed,
        start,
    )
}

/// Sweep the method's β and D grids, validate C inside each cell, and
/// keep the cell with the lowest validation error.
#[allow(clippy::too_many_arguments)]
fn pb_method(
    cfg: &ExperimentConfig,
    dataset: &str,
    method: &str,
    splits: &Splits,
    landmarks: &[pbrff::landmarks::Landmark],
    sigma: f64,
    beta_grid: &[f64],
    d_grid: &[usize],
    seed: u64,
) -> Result<(ResultRow, LandmarkModel)> {
    let start = Instant::now();
    let prior = GaussianPrior::new(sigma, splits.train.dim())?;
    let mut best: Option<(ResultRow, LandmarkModel)> = None;
    for &d in d_grid {
        for &beta in beta_grid {
            let model = fit_landmark_model(
                &splits.train,
                landmarks.to_vec(),
                &prior,
                d,
                beta,
                mix_seed(seed, 3),
                LandmarkSelection::KMeans,
                false,
            )?;
            let map_train = psi_map_matrix(&model, splits.train.features())?;
            let map_valid = psi_map_matrix(&model, splits.valid.features())?;
            let map_test = psi_map_matrix(&model, splits.test.features())?;
            let row = mapped_row(
                cfg,
                dataset,
                method,
                splits,
                &map_train,
                &map_valid,
                &map_test,
                sigma,
                Some(beta),
                Some(d),
                landmarks.len(),
                "kmeans",
                seed,
                start,
            )?;
            let improved = match &best {
                None => true,
                Some((incumbent, _)) => row.valid_error < incumbent.valid_error,
            };
            if improved {
                best = Some((row, model));
            }
        }
    }
    best.context("empty beta/D grid")
}

fn landmark_sweep(
    cfg: &ExperimentConfig,
    dataset: &str,
    splits: &Splits,
    sigma: f64,
    seed: u64,
) -> Result<Vec<ResultRow>> {
    let prior = GaussianPrior::new(sigma, splits.train.dim())?;
    let mut rows = Vec::new();
    for &fraction in &cfg.sweep_fractions {
        let n_landmarks = ((fraction * splits.train.n() as f64).ceil() as usize).max(1);
        for selection in [LandmarkSelection::Random, LandmarkSelection::KMeans] {
            let start = Instant::now();
            let landmarks = match selection {
                LandmarkSelection::Random => {
                    select_landmarks_random(&splits.train, n_landmarks, mix_seed(seed, 4))?
                }
                LandmarkSelection::KMeans => select_landmarks_kmeans(
                    &splits.train,
                    n_landmarks,
                    mix_seed(seed, 4),
                    KMEANS_ITERS,
                )?,
            };
            let model = fit_landmark_model(
                &splits.train,
                landmarks,
                &prior,
                64,
                1.0,
                mix_seed(seed, 5),
                selection,
                false,
            )?;
            let map_train = psi_map_matrix(&model, splits.train.features())?;
            let map_valid = psi_map_matrix(&model, splits.valid.features())?;
            let map_test = psi_map_matrix(&model, splits.test.features())?;
            let mut row = mapped_row(
                cfg,
                dataset,
                "PB-sweep",
                splits,
                &map_train,
                &map_valid,
                &map_test,
                sigma,
                Some(1.0),
                Some(64),
                n_landmarks,
                match selection {
                    LandmarkSelection::Random => "random",
                    LandmarkSelection::KMeans => "kmeans",
                },
                seed,
                start,
            )?;
            row.landmark_fraction = Some(fraction);
            rows.push(row);
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn mapped_row(
    cfg: &ExperimentConfig,
    dataset: &str,
    method: &str,
    splits: &Splits,
    map_train: &Array2<f64>,
    map_valid: &Array2<f64>,
    map_test: &Array2<f64>,
    sigma: f64,
    beta: Option<f64>,
    d: Option<usize>,
    n_landmarks: usize,
    selection: &str,
    seed: u64,
    start: Instant,
) -> Result<ResultRow> {
    let train_labels = splits.train.signed_labels()?;
    let valid_labels = splits.valid.signed_labels()?;
    let test_labels = splits.test.signed_labels()?;
    let (clf, valid_err) = fit_svm_validated(
        map_train,
        &train_labels,
        map_valid,
        &valid_labels,
        &cfg.c_grid,
        cfg.epochs,
        mix_seed(seed, 6),
    )?;
    Ok(ResultRow {
        pipeline: "landmarks_table".into(),
        dataset: dataset.into(),
        method: method.into(),
        seed,
        sigma,
        beta,
        c: clf.c(),
        d,
        n_landmarks: Some(n_landmarks),
        landmark_fraction: Some(cfg.landmark_fraction),
        selection: Some(selection.into()),
        epochs: cfg.epochs,
        train_error: error_rate(&clf, map_train.view(), &train_labels)?,
        valid_error: Some(valid_err),
        test_error: error_rate(&clf, map_test.view(), &test_labels)?,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
