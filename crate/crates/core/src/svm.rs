//! Primal stochastic subgradient linear SVM with averaged iterates.
//!
//! Minimizes `(1/2)‖w‖² + C Σ hinge(y_i(w·x_i + b))`, run as Pegasos on
//! the equivalent `(λ/2)‖w‖² + (1/n) Σ hinge` objective with
//! `λ = 1/(C·n)`. The feature maps consumed here are dense and
//! low-dimensional (2D cos/sin coordinates or one coordinate per
//! landmark), so a primal SGD scheme is sufficient; a dual QP can be
//! swapped in externally through the serialized model format.

use std::path::Path;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trained binary linear classifier `x ↦ sign(w·x + b)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearClassifier {
    weights: Vec<f64>,
    bias: f64,
    c: f64,
}

impl LinearClassifier {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.weights)
            .map(|(xi, wi)| xi * wi)
            .sum::<f64>()
            + self.bias)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(std::fs::File::create(path)?, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
    }
}

/// The primal objective `(1/2)‖w‖² + C Σ hinge`, exposed for
/// convergence checks.
pub fn primal_objective(
    clf: &LinearClassifier,
    features: ArrayView2<'_, f64>,
    labels: &[f64],
) -> f64 {
    let reg: f64 = clf.weights.iter().map(|w| w * w).sum::<f64>() / 2.0;
    let hinge: f64 = features
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(x, &y)| {
            let margin = y * clf.decision(x).expect("dims checked by caller");
            (1.0 - margin).max(0.0)
        })
        .sum();
    reg + clf.c * hinge
}

/// Train with Pegasos-style updates and iterate averaging. Labels must
/// be ±1 with both classes present; deterministic for a fixed seed.
pub fn train_linear_svm(
    features: ArrayView2<'_, f64>,
    labels: &[f64],
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearClassifier> {
    let n = features.nrows();
    let dim = features.ncols();
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n });
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidParameter("labels must be ±1".into()));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::SingleClassInput);
    }
    if !(c > 0.0) || epochs == 0 {
        return Err(Error::InvalidParameter(
            "need positive C and at least one epoch".into(),
        ));
    }

    let lambda = 1.0 / (c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut w = Array1::<f64>::zeros(dim);
    let mut b = 0.0;
    let mut w_avg = Array1::<f64>::zeros(dim);
    let mut b_avg = 0.0;
    let mut averaged: u64 = 0;
    let mut step: u64 = 0;
    let total_steps = (epochs * n) as u64;
    let radius = 1.0 / lambda.sqrt();

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let eta = 1.0 / (lambda * step as f64);
            let x = features.row(i);
            let y = labels[i];
            let margin = y * (w.dot(&x) + b);
            w *= 1.0 - eta * lambda;
            if margin < 1.0 {
                w.scaled_add(eta * y, &x);
                b += eta * y;
            }
            // Project back onto the ball containing the optimum.
            let norm = w.dot(&w).sqrt();
            if norm > radius {
                w *= radius / norm;
            }
            // Tail averaging: the first half of the schedule carries the
            // large early learning rates.
            if 2 * step > total_steps {
                w_avg += &w;
                b_avg += b;
                averaged += 1;
            }
        }
    }

    let total = averaged.max(1) as f64;
    let weights = (w_avg / total).to_vec();
    Ok(LinearClassifier {
        weights,
        bias: b_avg / total,
        c,
    })
}

/// `sign(w·x + b)` per row; a zero decision value maps to +1.
pub fn predict(clf: &LinearClassifier, features: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    features
        .rows()
        .into_iter()
        .map(|x| {
            let f = clf.decision(x)?;
            Ok(if f >= 0.0 { 1.0 } else { -1.0 })
        })
        .collect()
}

/// Fraction of mismatches between predictions and ±1 labels.
pub fn error_rate(
    clf: &LinearClassifier,
    features: ArrayView2<'_, f64>,
    labels: &[f64],
) -> Result<f64> {
    if labels.len() != features.nrows() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            got: labels.len(),
        });
    }
    let predictions = predict(clf, features)?;
    let wrong = predictions
        .iter()
        .zip(labels)
        .filter(|(p, y)| p != y)
        .count();
    Ok(wrong as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_two_points() {
        let x = array![[-1.0, -1.0], [1.0, 1.0]];
        let y = [-1.0, 1.0];
        let clf = train_linear_svm(x.view(), &y, 10.0, 200, 0).unwrap();
        assert_eq!(error_rate(&clf, x.view(), &y).unwrap(), 0.0);
    }

    #[test]
    fn xor_is_not_linearly_separable() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [1.0, 1.0, -1.0, -1.0];
        let clf = train_linear_svm(x.view(), &y, 10.0, 300, 1).unwrap();
        assert!(error_rate(&clf, x.view(), &y).unwrap() >= 0.25);
    }

    fn blobs(n: usize, margin: f64, seed: u64) -> (Array2<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            x[[i, 0]] = sign * (margin / 2.0 + rng.gen_range(0.0..1.0));
            x[[i, 1]] = rng.gen_range(-1.0..1.0);
            y.push(sign);
        }
        (x, y)
    }

    #[test]
    fn separable_blobs_reach_zero_test_error() {
        for seed in 0..5 {
            let (xtr, ytr) = blobs(200, 2.0, seed);
            let (xte, yte) = blobs(100, 2.0, seed + 100);
            let clf = train_linear_svm(xtr.view(), &ytr, 10.0, 100, seed).unwrap();
            assert_eq!(error_rate(&clf, xte.view(), &yte).unwrap(), 0.0, "seed {seed}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = blobs(60, 1.0, 3);
        let a = train_linear_svm(x.view(), &y, 1.0, 50, 7).unwrap();
        let b = train_linear_svm(x.view(), &y, 1.0, 50, 7).unwrap();
        assert_eq!(a.weights(), b.weights());
        assert_eq!(a.bias(), b.bias());
    }

    #[test]
    fn objective_decreases_across_epoch_checkpoints() {
        let (x, y) = blobs(120, 0.5, 5);
        let mut last = f64::INFINITY;
        for epochs in [5, 20, 80, 200] {
            let clf = train_linear_svm(x.view(), &y, 1.0, epochs, 2).unwrap();
            let obj = primal_objective(&clf, x.view(), &y);
            assert!(
                obj <= last * (1.0 + 1e-3),
                "objective rose: {obj} after {last}"
            );
            last = last.min(obj);
        }
    }

    #[test]
    fn predict_rules() {
        let clf = LinearClassifier {
            weights: vec![1.0, 0.0],
            bias: 0.0,
            c: 1.0,
        };
        let preds = predict(&clf, array![[2.0, 5.0], [0.0, 3.0], [-1.0, 0.0]].view()).unwrap();
        // Boundary point (f = 0) maps to +1.
        assert_eq!(preds, vec![1.0, 1.0, -1.0]);

        let flipped = LinearClassifier {
            weights: vec![-1.0, 0.0],
            bias: 0.0,
            c: 1.0,
        };
        let preds2 = predict(&flipped, array![[2.0, 5.0], [-1.0, 0.0]].view()).unwrap();
        assert_eq!(preds2, vec![-1.0, 1.0]);
    }

    #[test]
    fn predictions_invariant_under_positive_rescaling() {
        let (x, y) = blobs(40, 1.0, 9);
        let clf = train_linear_svm(x.view(), &y, 1.0, 40, 4).unwrap();
        let scaled = LinearClassifier {
            weights: clf.weights().iter().map(|w| w * 7.5).collect(),
            bias: clf.bias() * 7.5,
            c: clf.c(),
        };
        assert_eq!(
            predict(&clf, x.view()).unwrap(),
            predict(&scaled, x.view()).unwrap()
        );
    }

    #[test]
    fn error_rate_edges() {
        let clf = LinearClassifier {
            weights: vec![1.0],
            bias: 0.0,
            c: 1.0,
        };
        let x = array![[1.0], [2.0], [-1.0], [-2.0]];
        assert_eq!(error_rate(&clf, x.view(), &[1.0, 1.0, -1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(error_rate(&clf, x.view(), &[-1.0, -1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(error_rate(&clf, x.view(), &[1.0, -1.0, -1.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(
            train_linear_svm(x.view(), &[1.0, 1.0], 1.0, 10, 0),
            Err(Error::SingleClassInput)
        ));
    }
}
