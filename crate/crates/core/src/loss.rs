//! Kernel-alignment losses: the linear loss, the O(n²) pairwise oracle,
//! the O(n) closed form from per-class trigonometric sums, and the
//! per-landmark loss.
//!
//! The closed form rewrites the pairwise double sum through per-class
//! sums `c_y = Σ cos(ω·x)`, `s_y = Σ sin(ω·x)`, so the pairwise ±1
//! agreement matrix is never materialized and memory stays O(n + L·N).

use ndarray::ArrayView1;
use rayon::prelude::*;

use crate::data::{label_agreement, LabeledDataset};
use crate::error::{Error, Result};
use crate::fourier::FrequencySet;

/// One empirical alignment loss per sampled hypothesis, each in [0, 1].
#[derive(Debug, Clone)]
pub struct LossVector {
    losses: Vec<f64>,
    n_used: usize,
}

impl LossVector {
    fn new(losses: Vec<f64>, n_used: usize) -> Self {
        debug_assert!(losses
            .iter()
            .all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)));
        let losses = losses.into_iter().map(|l| l.clamp(0.0, 1.0)).collect();
        Self { losses, n_used }
    }

    /// Build from externally computed per-hypothesis losses.
    pub fn from_values(losses: Vec<f64>, n_used: usize) -> Result<Self> {
        if losses.iter().any(|l| !(-1e-12..=1.0 + 1e-12).contains(l)) {
            return Err(Error::InvalidParameter(
                "alignment losses must lie in [0, 1]".into(),
            ));
        }
        Ok(Self::new(losses, n_used))
    }

    pub fn values(&self) -> &[f64] {
        &self.losses
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn n_used(&self) -> usize {
        self.n_used
    }
}

/// The linear loss `ℓ(k, λ) = (1 - λk)/2` of a kernel value in [-1, 1].
pub fn linear_loss(k_value: f64, lambda: f64) -> Result<f64> {
    if k_value.abs() > 1.0 + 1e-9 {
        return Err(Error::KernelValueOutOfRange(k_value));
    }
    Ok(((1.0 - lambda * k_value) / 2.0).clamp(0.0, 1.0))
}

/// Compensated (Kahan) accumulator; the closed form subtracts large
/// squared sums, so per-class sums are accumulated without drift.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn check_pair_count(ds: &LabeledDataset) -> Result<()> {
    if ds.n() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: ds.n(),
        });
    }
    Ok(())
}

fn check_dims(freqs: &FrequencySet, dim: usize) -> Result<()> {
    if freqs.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: freqs.dim(),
            got: dim,
        });
    }
    Ok(())
}

/// O(n²) pairwise evaluation of the empirical alignment loss,
/// `(1/(n²-n)) Σ_{i≠j} ℓ(cos(ω·(x_i-x_j)), λ_ij)` per hypothesis.
/// Serves as the oracle for [`empirical_loss_fast`].
pub fn empirical_loss_naive(freqs: &FrequencySet, ds: &LabeledDataset) -> Result<LossVector> {
    check_pair_count(ds)?;
    check_dims(freqs, ds.dim())?;
    let n = ds.n();
    let projections = ds.features().dot(&freqs.omegas().t());
    let losses: Vec<f64> = (0..freqs.n_freqs())
        .into_par_iter()
        .map(|m| {
            let proj = projections.column(m);
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let lambda = label_agreement(ds.labels()[i], ds.labels()[j]);
                    let k = (proj[i] - proj[j]).cos();
                    acc += (1.0 - lambda * k) / 2.0;
                }
            }
            acc / (n * (n - 1)) as f64
        })
        .collect();
    Ok(LossVector::new(losses, n))
}

/// O(n) closed form of the empirical alignment loss:
/// `n/(2(n-1)) - [2 Σ_y (c_y²+s_y²) - (Σ_y c_y)² - (Σ_y s_y)²] / (2n(n-1))`.
/// For binary data this coincides with the ±1-label form
/// `n/(2(n-1)) - [(Σ y_i cos ω·x_i)² + (Σ y_i sin ω·x_i)²]/(2n(n-1))`.
pub fn empirical_loss_fast(freqs: &FrequencySet, ds: &LabeledDataset) -> Result<LossVector> {
    check_pair_count(ds)?;
    check_dims(freqs, ds.dim())?;
    let n = ds.n();
    let n_classes = ds.n_classes();
    let n_freqs = freqs.n_freqs();
    // Accumulate the per-class trig sums over row blocks sized so each
    // projection slab stays cache-resident regardless of n.
    let block = (512 * 1024 / (8 * n_freqs)).clamp(64, n.max(64));
    let mut cos_acc = vec![vec![Kahan::default(); n_classes]; n_freqs];
    let mut sin_acc = vec![vec![Kahan::default(); n_classes]; n_freqs];
    for start in (0..n).step_by(block) {
        let end = (start + block).min(n);
        let proj = ds
            .features()
            .slice(ndarray::s![start..end, ..])
            .dot(&freqs.omegas().t());
        let labels = &ds.labels()[start..end];
        cos_acc
            .par_iter_mut()
            .zip(sin_acc.par_iter_mut())
            .enumerate()
            .for_each(|(m, (cos_by_class, sin_by_class))| {
                for (i, &p) in proj.column(m).iter().enumerate() {
                    let y = labels[i];
                    cos_by_class[y].add(p.cos());
                    sin_by_class[y].add(p.sin());
                }
            });
    }
    let losses: Vec<f64> = cos_acc
        .iter()
        .zip(&sin_acc)
        .map(|(cos_by_class, sin_by_class)| {
            let mut sq = 0.0;
            let mut cos_total = Kahan::default();
            let mut sin_total = Kahan::default();
            for y in 0..n_classes {
                sq += cos_by_class[y].sum.powi(2) + sin_by_class[y].sum.powi(2);
                cos_total.add(cos_by_class[y].sum);
                sin_total.add(sin_by_class[y].sum);
            }
            let nf = n as f64;
            let bracket = 2.0 * sq - cos_total.sum.powi(2) - sin_total.sum.powi(2);
            let loss = nf / (2.0 * (nf - 1.0)) - bracket / (2.0 * nf * (nf - 1.0));
            loss.clamp(0.0, 1.0)
        })
        .collect();
    Ok(LossVector::new(losses, n))
}

/// Per-landmark empirical alignment loss,
/// `(1/m) Σ_j ℓ(cos(ω·(x_l - x_j)), λ(y_l, y_j))` over admissible samples.
///
/// When the landmark is a training row, pass its index as
/// `exclude_index` so the `j ≠ i` exclusion applies; synthetic landmarks
/// (e.g. k-means centroids) compare against every sample.
pub fn landmark_loss(
    freqs: &FrequencySet,
    ds: &LabeledDataset,
    landmark_x: ArrayView1<'_, f64>,
    landmark_y: usize,
    exclude_index: Option<usize>,
) -> Result<LossVector> {
    check_dims(freqs, ds.dim())?;
    if landmark_x.len() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: landmark_x.len(),
        });
    }
    let admissible: Vec<usize> = (0..ds.n())
        .filter(|&j| Some(j) != exclude_index)
        .collect();
    if admissible.is_empty() {
        return Err(Error::NoAdmissibleSamples);
    }

    let projections = ds.features().dot(&freqs.omegas().t());
    let landmark_proj = freqs.omegas().dot(&landmark_x);
    let m = admissible.len() as f64;
    let losses: Vec<f64> = (0..freqs.n_freqs())
        .into_par_iter()
        .map(|k| {
            let proj = projections.column(k);
            let mut acc = Kahan::default();
            for &j in &admissible {
                let lambda = label_agreement(landmark_y, ds.labels()[j]);
                let cos = (landmark_proj[k] - proj[j]).cos();
                acc.add((1.0 - lambda * cos) / 2.0);
            }
            (acc.sum / m).clamp(0.0, 1.0)
        })
        .collect();
    Ok(LossVector::new(losses, admissible.len()))
}
