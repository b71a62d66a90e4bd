use std::time::Instant;

use anyhow::Result;
use ndarray::{Array1, Array2};

use pbrff::data::{split, standardize, LabeledDataset, SplitSpec};
use pbrff::fourier::{expected_kernel, rbf_kernel, GaussianPrior};
use pbrff::landmarks::{
    fit_landmark_model, psi_map_matrix, rbf_landmark_map_matrix, select_landmarks_random,
    LandmarkModel, LandmarkSelection,
};
use pbrff::svm::{error_rate, predict, LinearClassifier};

use crate::config::ExperimentConfig;
use crate::model::fit_svm_validated;
use crate::results::{write_results_csv, write_surface_csv, ResultRow};
use crate::synth::concentric_circles;

pub const TOY_N_LANDMARKS: usize = 5;
pub const TOY_D: usize = 20;
pub const TOY_BETA: f64 = 1.0;
/// Kernel width: half the gap between the standardized rings,
/// local enough for crisp per-landmark similarities.
pub const TOY_SIGMA: f64 = 0.5;
const SURFACE_CELLS: usize = 41;
const SURFACE_HALF_WIDTH: f64 = 3.0;

pub fn run_toy_landmarks(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (rep, &seed) in cfg.seeds.iter().enumerate() {
        let ds = concentric_circles(cfg.n_synthetic, 0.1, seed);
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

        let sigma = cfg.sigma.unwrap_or(TOY_SIGMA);

        rows.push(raw_baseline(cfg, &train, &valid, &test, seed)?);

        let landmarks = select_landmarks_random(&train, TOY_N_LANDMARKS, seed)?;
        let prior = GaussianPrior::new(sigma, train.dim())?;
        let start = Instant::now();
        let model = fit_landmark_model(
            &train,
            landmarks,
            &prior,
            TOY_D,
            TOY_BETA,
            seed,
            LandmarkSelection::Random,
            false,
        )?;
        let psi_train = psi_map_matrix(&model, train.features())?;
        let psi_valid = psi_map_matrix(&model, valid.features())?;
        let psi_test = psi_map_matrix(&model, test.features())?;
        let (pb_clf, pb_row) = mapped_run(
            cfg,
            "PB-Landmarks",
            sigma,
            Some(TOY_BETA),
            &psi_train,
            &psi_valid,
            &psi_test,
            &train,
            &valid,
            &test,
            seed,
            start,
        )?;
        rows.push(pb_row);

        let start = Instant::now();
        let rbf_train = rbf_landmark_map_matrix(model.landmarks(), sigma, train.features());
        let rbf_valid = rbf_landmark_map_matrix(model.landmarks(), sigma, valid.features());
        let rbf_test = rbf_landmark_map_matrix(model.landmarks(), sigma, test.features());
        let (rbf_clf, rbf_row) = mapped_run(
            cfg,
            "RBF-Landmarks",
            sigma,
            None,
            &rbf_train,
            &rbf_valid,
            &rbf_test,
            &train,
            &valid,
            &test,
            seed,
            start,
        )?;
        rows.push(rbf_row);

        // Plot artifacts for the first repetition only.
        if rep == 0 {
            emit_artifacts(cfg, &model, sigma, &train, &psi_train, &pb_clf, &rbf_clf)?;
        }
    }
    write_results_csv(&cfg.output_dir.join("results.csv"), &rows)?;
    Ok(rows)
}

fn raw_baseline(
    cfg: &ExperimentConfig,
    train: &LabeledDataset,
    valid: &LabeledDataset,
    test: &LabeledDataset,
    seed: u64,
) -> Result<ResultRow> {
    let start = Instant::now();
    let train_labels = train.signed_labels()?;
    let valid_labels = valid.signed_labels()?;
    let test_labels = test.signed_labels()?;
    let (clf, valid_err) = fit_svm_validated(
        train.features(),
        &train_labels,
        valid.features(),
        &valid_labels,
        &cfg.c_grid,
        cfg.epochs,
        seed,
    )?;
    Ok(ResultRow {
        pipeline: "toy_landmarks".into(),
        dataset: "circles".into(),
        method: "raw-linear".into(),
        seed,
        sigma: f64::NAN,
        beta: None,
        c: clf.c(),
        d: None,
        n_landmarks: None,
        landmark_fraction: None,
        selection: None,
        epochs: cfg.epochs,
        train_error: error_rate(&clf, train.features().view(), &train_labels)?,
        valid_error: Some(valid_err),
        test_error: error_rate(&clf, test.features().view(), &test_labels)?,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[allow(clippy::too_many_arguments)]
fn mapped_run(
    cfg: &ExperimentConfig,
    method: &str,
    sigma: f64,
    beta: Option<f64>,
    map_train: &Array2<f64>,
    map_valid: &Array2<f64>,
    map_test: &Array2<f64>,
    train: &LabeledDataset,
    valid: &LabeledDataset,
    test: &LabeledDataset,
    seed: u64,
    start: Instant,
) -> Result<(LinearClassifier, ResultRow)> {
    let train_labels = train.signed_labels()?;
    let valid_labels = valid.signed_labels()?;
    let test_labels = test.signed_labels()?;
    let (clf, valid_err) = fit_svm_validated(
        map_train,
        &train_labels,
        map_valid,
        &valid_labels,
        &cfg.c_grid,
        cfg.epochs,
        seed,
    )?;
    let row = ResultRow {
        pipeline: "toy_landmarks".into(),
        dataset: "circles".into(),
        method: method.into(),
        seed,
        sigma,
        beta,
        c: clf.c(),
        d: beta.map(|_| TOY_D),
        n_landmarks: Some(TOY_N_LANDMARKS),
        landmark_fraction: None,
        selection: Some("random".into()),
        epochs: cfg.epochs,
        train_error: error_rate(&clf, map_train.view(), &train_labels)?,
        valid_error: Some(valid_err),
        test_error: error_rate(&clf, map_test.view(), &test_labels)?,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((clf, row))
}

/// Similarity surfaces are evaluated on a square grid of offsets
/// centered at each landmark, so the center cell sits exactly on it.
fn emit_artifacts(
    cfg: &ExperimentConfig,
    model: &LandmarkModel,
    sigma: f64,
    train: &LabeledDataset,
    psi_train: &Array2<f64>,
    pb_clf: &LinearClassifier,
    rbf_clf: &LinearClassifier,
) -> Result<()> {
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out)?;

    for (l, landmark) in model.landmarks().iter().enumerate() {
        let center = &landmark.x;
        let xs: Vec<f64> = grid_axis(center[0]);
        let ys: Vec<f64> = grid_axis(center[1]);
        let mut rbf_surface = Array2::zeros((ys.len(), xs.len()));
        let mut pb_surface = Array2::zeros((ys.len(), xs.len()));
        let weights = model.posteriors()[l].weights();
        let freqs = &model.freqs()[l];
        for (i, &y) in ys.iter().enumerate() {
            for (j, &x) in xs.iter().enumerate() {
                let point = Array1::from(vec![x, y]);
                rbf_surface[[i, j]] = rbf_kernel(center.view(), point.view(), sigma);
                let delta = center - &point;
                pb_surface[[i, j]] = expected_kernel(weights, freqs, delta.view())?;
            }
        }
        write_surface_csv(&out.join(format!("surface_rbf_l{l}.csv")), &xs, &ys, &rbf_surface)?;
        write_surface_csv(&out.join(format!("surface_pb_l{l}.csv")), &xs, &ys, &pb_surface)?;
    }

    // Mapped training set: one learned-similarity coordinate per landmark.
    let mut writer = csv::Writer::from_path(out.join("mapped_dataset.csv"))?;
    let mut header: Vec<String> = (0..model.n_landmarks()).map(|l| format!("psi_{l}")).collect();
    header.push("label".into());
    writer.write_record(&header)?;
    for (i, row) in psi_train.rows().into_iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(train.labels()[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;

    // Decision values of each pipeline's SVM over a shared data-space grid.
    let xs = grid_axis(0.0);
    let ys = grid_axis(0.0);
    let mut grid_points = Array2::zeros((xs.len() * ys.len(), 2));
    for (i, &y) in ys.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            grid_points[[i * xs.len() + j, 0]] = x;
            grid_points[[i * xs.len() + j, 1]] = y;
        }
    }
    let pb_grid = psi_map_matrix(model, &grid_points)?;
    let rbf_grid = rbf_landmark_map_matrix(model.landmarks(), sigma, &grid_points);
    for (name, mapped, clf) in [
        ("decision_pb.csv", &pb_grid, pb_clf),
        ("decision_rbf.csv", &rbf_grid, rbf_clf),
    ] {
        let decisions = predict(clf, mapped.view())?;
        let surface = Array2::from_shape_vec((ys.len(), xs.len()), decisions)?;
        write_surface_csv(&out.join(name), &xs, &ys, &surface)?;
    }
    Ok(())
}

fn grid_axis(center: f64) -> Vec<f64> {
    (0..SURFACE_CELLS)
        .map(|i| {
            center - SURFACE_HALF_WIDTH
                + 2.0 * SURFACE_HALF_WIDTH * i as f64 / (SURFACE_CELLS - 1) as f64
        })
        .collect()
}
