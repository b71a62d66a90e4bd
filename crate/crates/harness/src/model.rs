use anyhow::{bail, Result};
use ndarray::Array2;

use pbrff::data::LabeledDataset;
use pbrff::fourier::{rff_map_matrix, sample_frequencies, GaussianPrior};
use pbrff::svm::{error_rate, train_linear_svm, LinearClassifier};

/// Decorrelate the per-stage RNG streams derived from one run seed
/// (splitmix64 finalizer).
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Train one SVM per C on pre-mapped features and keep the one with the
/// lowest validation error; ties go to the smaller C.
pub fn fit_svm_validated(
    train: &Array2<f64>,
    train_labels: &[f64],
    valid: &Array2<f64>,
    valid_labels: &[f64],
    c_grid: &[f64],
    epochs: usize,
    seed: u64,
) -> Result<(LinearClassifier, f64)> {
    let mut grid = c_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    let mut best: Option<(LinearClassifier, f64)> = None;
    for &c in &grid {
        let clf = train_linear_svm(train.view(), train_labels, c, epochs, seed)?;
        let valid_err = error_rate(&clf, valid.view(), valid_labels)?;
        let better = match &best {
            None => true,
            Some((_, err)) => valid_err < *err,
        };
        if better {
            best = Some((clf, valid_err));
        }
    }
    best.ok_or_else(|| anyhow::anyhow!("empty C grid"))
}

/// Kernel width selected by validation accuracy of a linear SVM on a
/// large random feature map (a stand-in for a full RBF SVM). Ties go to
/// the smaller width.
pub fn select_sigma(
    train: &LabeledDataset,
    valid: &LabeledDataset,
    sigma_grid: &[f64],
    d_proxy: usize,
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<f64> {
    if sigma_grid.is_empty() {
        bail!("empty sigma grid");
    }
    let train_labels = train.signed_labels()?;
    let valid_labels = valid.signed_labels()?;
    let mut grid = sigma_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    let mut best: Option<(f64, f64)> = None;
    for &sigma in &grid {
        let prior = GaussianPrior::new(sigma, train.dim())?;
        let freqs = sample_frequencies(&prior, d_proxy, seed)?;
        let phi_train = rff_map_matrix(train.features(), &freqs)?;
        let phi_valid = rff_map_matrix(valid.features(), &freqs)?;
        let clf = train_linear_svm(phi_train.view(), &train_labels, c, epochs, seed)?;
        let err = error_rate(&clf, phi_valid.view(), &valid_labels)?;
        // Strict improvement keeps the earlier (smaller) width on ties.
        let better = match best {
            None => true,
            Some((_, best_err)) => err < best_err,
        };
        if better {
            best = Some((sigma, err));
        }
    }
    Ok(best.unwrap().0)
}
