//! Property tests for the cross-module invariants.

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pbrff::data::LabeledDataset;
use pbrff::fourier::{rbf_kernel, rff_map, sample_frequencies, GaussianPrior};
use pbrff::loss::{empirical_loss_fast, LossVector};
use pbrff::posterior::{chi_square, compute_posterior, kl_to_uniform, resample};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rff_map_has_unit_norm(
        seed in 0u64..1000,
        n_freqs in 1usize..64,
        x in prop::collection::vec(-10.0f64..10.0, 1..8),
    ) {
        let d = x.len();
        let prior = GaussianPrior::new(1.0, d).unwrap();
        let freqs = sample_frequencies(&prior, n_freqs, seed).unwrap();
        let phi = rff_map(Array1::from(x).view(), &freqs).unwrap();
        let norm_sq: f64 = phi.iter().map(|v| v * v).sum();
        prop_assert!((norm_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn losses_bounded_and_permutation_invariant(
        seed in 0u64..1000,
        n in 4usize..40,
        n_classes in 2usize..5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-2.0..2.0));
        let labels: Vec<usize> =
            (0..n).map(|i| if i < n_classes { i } else { rng.gen_range(0..n_classes) }).collect();
        let ds = LabeledDataset::new(features, labels, n_classes).unwrap();
        let prior = GaussianPrior::new(1.0, 3).unwrap();
        let freqs = sample_frequencies(&prior, 20, seed + 1).unwrap();

        let base = empirical_loss_fast(&freqs, &ds).unwrap();
        prop_assert!(base.values().iter().all(|&l| (0.0..=1.0).contains(&l)));

        let mut order: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let permuted = ds.select(&order);
        let shuffled = empirical_loss_fast(&freqs, &permuted).unwrap();
        for (a, b) in base.values().iter().zip(shuffled.values()) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn posterior_simplex_and_divergence_ranges(
        losses in prop::collection::vec(0.0f64..1.0, 2..64),
        beta in 0.0f64..50.0,
    ) {
        let n_atoms = losses.len();
        let lv = LossVector::from_values(losses, 100).unwrap();
        let q = compute_posterior(&lv, beta, 100).unwrap();
        let sum: f64 = q.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
        prop_assert!(q.weights().iter().all(|&w| w >= 0.0));

        let kl = kl_to_uniform(&q);
        prop_assert!(kl >= 0.0 && kl <= (n_atoms as f64).ln() + 1e-10);
        let chi = chi_square(&q);
        prop_assert!(chi >= 0.0 && chi <= n_atoms as f64 - 1.0 + 1e-9);
    }

    #[test]
    fn resample_is_deterministic_and_supported(
        seed in 0u64..500,
        beta in 0.0f64..5.0,
    ) {
        let prior = GaussianPrior::new(1.0, 2).unwrap();
        let freqs = sample_frequencies(&prior, 10, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
        let values: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
        let lv = LossVector::from_values(values, 50).unwrap();
        let q = compute_posterior(&lv, beta, 50).unwrap();
        let a = resample(&q, &freqs, 30, seed + 1).unwrap();
        let b = resample(&q, &freqs, 30, seed + 1).unwrap();
        prop_assert_eq!(a.omegas(), b.omegas());
        // Every resampled row is one of the source atoms.
        for row in a.omegas().rows() {
            let found = freqs
                .omegas()
                .rows()
                .into_iter()
                .any(|src| src.iter().zip(row.iter()).all(|(x, y)| x == y));
            prop_assert!(found);
        }
    }
}

/// Monte-Carlo consistency of the feature map: over 50 independent
/// frequency sets of size 64, the mean of φ(x)·φ(x') is within 3
/// standard errors of the exact Gaussian kernel.
#[test]
fn rff_inner_product_concentrates_on_the_kernel() {
    let d = 3;
    let prior = GaussianPrior::new(1.0, d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(321);
    for pair in 0..20 {
        let x = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));
        let y = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));
        let exact = rbf_kernel(x.view(), y.view(), 1.0);

        let estimates: Vec<f64> = (0..50)
            .map(|rep| {
                let freqs = sample_frequencies(&prior, 64, 1000 + pair * 100 + rep).unwrap();
                rff_map(x.view(), &freqs)
                    .unwrap()
                    .dot(&rff_map(y.view(), &freqs).unwrap())
            })
            .collect();
        let mean: f64 = estimates.iter().sum::<f64>() / 50.0;
        let var: f64 =
            estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 49.0;
        let stderr = (var / 50.0).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * stderr.max(1e-4),
            "pair {pair}: mean {mean} vs exact {exact} (stderr {stderr})"
        );
    }
}
