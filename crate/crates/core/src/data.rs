//! Dataset ingestion, splitting, standardization, and pairwise label
//! agreement.
//!
//! Labels are stored as class ids `{0..L-1}`; the ±1 pairwise agreement
//! used by the alignment losses is derived on demand through
//! [`label_agreement`], so binary and multiclass datasets share one path.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A dense labeled dataset: an `n x d` feature matrix plus class ids.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledDataset {
    /// Build a dataset from a feature matrix and class ids in `{0..n_classes-1}`.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.nrows() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                got: features.nrows(),
            });
        }
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        for ((row, column), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, column });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} outside [0, {n_classes})"
            )));
        }
        Ok(Self {
            features,
            labels,
            n_classes,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// Subset by row indices, keeping the class dictionary.
    pub fn select(&self, indices: &[usize]) -> Self {
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self {
            features,
            labels,
            n_classes: self.n_classes,
        }
    }

    /// Labels mapped to ±1 for binary classifiers. Class 1 maps to +1.
    pub fn signed_labels(&self) -> Result<Vec<f64>> {
        if self.n_classes != 2 {
            return Err(Error::InvalidParameter(format!(
                "signed labels need a binary dataset, got {} classes",
                self.n_classes
            )));
        }
        Ok(self
            .labels
            .iter()
            .map(|&y| if y == 1 { 1.0 } else { -1.0 })
            .collect())
    }
}

/// Train/validation/test fractions plus the shuffling seed.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64, seed: u64) -> Result<Self> {
        for f in [train, valid, test] {
            if !(0.0..1.0).contains(&f) || f == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "split fraction {f} outside (0,1)"
                )));
            }
        }
        if ((train + valid + test) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(
                "split fractions must sum to 1".into(),
            ));
        }
        Ok(Self {
            train_fraction: train,
            valid_fraction: valid,
            test_fraction: test,
            seed,
        })
    }
}

/// Load a CSV file into a [`LabeledDataset`].
///
/// The label column holds integers or arbitrary categorical strings;
/// either way labels are re-indexed to `{0..L-1}` in order of first
/// appearance of each distinct value.
pub fn load_csv(path: &Path, label_column: usize, has_header: bool) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_path(path)?;

    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    let first_data_line = if has_header { 2 } else { 1 };

    for (rec_idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = first_data_line + rec_idx;
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::RaggedRow {
                    line,
                    expected: w,
                    found: record.len(),
                })
            }
            _ => {}
        }
        if label_column >= record.len() {
            return Err(Error::InvalidParameter(format!(
                "label column {label_column} outside row of width {}",
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(record.len() - 1);
        for (column, cell) in record.iter().enumerate() {
            if column == label_column {
                raw_labels.push(cell.trim().to_string());
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line,
                column,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature {
                    row: rec_idx,
                    column,
                });
            }
            row.push(v);
        }
        features.push(row);
    }

    if features.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: features.len(),
        });
    }

    // Integer labels keep numeric interpretation for the dictionary key so
    // "1" and "1.0" collapse; otherwise the raw string is the key.
    let mut dictionary: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(raw_labels.len());
    for raw in &raw_labels {
        let key = raw
            .parse::<f64>()
            .ok()
            .filter(|v| v.fract() == 0.0)
            .map(|v| format!("{}", v as i64))
            .unwrap_or_else(|| raw.clone());
        let id = match dictionary.iter().position(|k| *k == key) {
            Some(id) => id,
            None => {
                dictionary.push(key);
                dictionary.len() - 1
            }
        };
        labels.push(id);
    }
    if dictionary.len() < 2 {
        return Err(Error::DegenerateDataset);
    }

    let d = features[0].len();
    let flat: Vec<f64> = features.into_iter().flatten().collect();
    let matrix = Array2::from_shape_vec((labels.len(), d), flat)
        .expect("row widths were already validated");
    LabeledDataset::new(matrix, labels, dictionary.len())
}

/// Split into (train, valid, test) by a seeded index permutation.
///
/// Test and validation sizes round up, the training split takes the
/// remainder. Every split must contain each class at least once.
pub fn split(
    ds: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let n = ds.n();
    if n < 10 {
        return Err(Error::TooFewSamples {
            required: 10,
            got: n,
        });
    }
    let n_test = (spec.test_fraction * n as f64).ceil() as usize;
    let n_valid = (spec.valid_fraction * n as f64).ceil() as usize;
    if n_test + n_valid >= n {
        return Err(Error::EmptySplit { split: "train" });
    }
    let n_train = n - n_test - n_valid;

    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);

    let train = ds.select(&indices[..n_train]);
    let valid = ds.select(&indices[n_train..n_train + n_valid]);
    let test = ds.select(&indices[n_train + n_valid..]);

    for (part, name) in [(&train, "train"), (&valid, "valid"), (&test, "test")] {
        for class in 0..ds.n_classes() {
            if !part.labels().iter().any(|&y| y == class) {
                return Err(Error::MissingClass { class, split: name });
            }
        }
    }
    Ok((train, valid, test))
}

/// Per-column statistics fitted on a training split.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Array1<f64>,
    std: Array1<f64>,
}

impl Standardizer {
    /// Columns with standard deviation below 1e-12 are centered only.
    pub fn fit(train: &LabeledDataset) -> Self {
        let x = train.features();
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).expect("non-empty train split");
        let mut std = Array1::zeros(x.ncols());
        for j in 0..x.ncols() {
            let var = x.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            std[j] = if s < 1e-12 { 1.0 } else { s };
        }
        Self { mean, std }
    }

    pub fn transform(&self, ds: &LabeledDataset) -> LabeledDataset {
        let mut features = ds.features().clone();
        for mut row in features.rows_mut() {
            for j in 0..row.len() {
                row[j] = (row[j] - self.mean[j]) / self.std[j];
            }
        }
        LabeledDataset {
            features,
            labels: ds.labels.clone(),
            n_classes: ds.n_classes,
        }
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn std(&self) -> &Array1<f64> {
        &self.std
    }
}

/// Fit statistics on `train` and apply them to every split.
pub fn standardize(
    train: &LabeledDataset,
    others: &[&LabeledDataset],
) -> (LabeledDataset, Vec<LabeledDataset>, Standardizer) {
    let stats = Standardizer::fit(train);
    let train_out = stats.transform(train);
    let others_out = others.iter().map(|ds| stats.transform(ds)).collect();
    (train_out, others_out, stats)
}

/// Pairwise label agreement: +1 iff the class ids match, −1 otherwise.
#[inline]
pub fn label_agreement(y: usize, y_prime: usize) -> f64 {
    if y == y_prime {
        1.0
    } else {
        -1.0
    }
}
