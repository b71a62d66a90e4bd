use std::f64::consts::TAU;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use pbrff::data::LabeledDataset;

/// Two concentric circles with radial noise: class 0 at radius 1,
/// class 1 at radius 2. No hyperplane in raw coordinates does much
/// better than capturing one cap of the outer circle.
pub fn concentric_circles(n: usize, noise: f64, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radial = Normal::new(0.0, noise).unwrap();
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let radius = if label == 0 { 1.0 } else { 2.0 } + radial.sample(&mut rng);
        let angle = rng.gen_range(0.0..TAU);
        features[[i, 0]] = radius * angle.cos();
        features[[i, 1]] = radius * angle.sin();
        labels.push(label);
    }
    LabeledDataset::new(features, labels, 2).unwrap()
}

/// Oscillatory benchmark: points uniform on [-3, 3]^2, labelled by the
/// sign of cos(w* . x) with w* well outside the bulk of a unit-width
/// frequency prior. Points too close to the label boundary are
/// rejected, so the task is noise-free but needs the right frequency.
pub fn stripes(n: usize, seed: u64) -> LabeledDataset {
    let w_star = [1.2f64, 1.2];
    let margin = 0.2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let x = rng.gen_range(-3.0..3.0);
        let y = rng.gen_range(-3.0..3.0);
        let phase = (w_star[0] * x + w_star[1] * y).cos();
        if phase.abs() < margin {
            continue;
        }
        features[[i, 0]] = x;
        features[[i, 1]] = y;
        labels.push(if phase > 0.0 { 1 } else { 0 });
        i += 1;
    }
    LabeledDataset::new(features, labels, 2).unwrap()
}
