//! Closed-form Gibbs pseudo-posteriors over sampled frequencies,
//! discrete divergences to the uniform prior, and posterior-weighted
//! resampling.
//!
//! The pseudo-posterior `Q_m ∝ exp(-β√n L̂(h_m))` minimizes the
//! PAC-Bayes trade-off `emp + KL/t` at `t = β√n`. The normalizer is kept
//! in log space since `β√n·loss` can exceed 700 for large n.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FrequencySet;
use crate::loss::LossVector;

/// A discrete probability vector over a sampled frequency set.
#[derive(Debug, Clone)]
pub struct PseudoPosterior {
    weights: Vec<f64>,
    beta: f64,
    n: usize,
    log_z: f64,
    losses: LossVector,
}

/// Serialized form paired with the frequency-set sidecar.
#[derive(Debug, Serialize, Deserialize)]
struct PosteriorRecord {
    beta: f64,
    n: usize,
    log_z: f64,
    weights: Vec<f64>,
    losses: Vec<f64>,
    losses_n_used: usize,
}

impl PseudoPosterior {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The canonical bound parameter `t = β√n`.
    pub fn t(&self) -> f64 {
        self.beta * (self.n as f64).sqrt()
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn losses(&self) -> &LossVector {
        &self.losses
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Posterior-weighted empirical loss `Σ_m Q_m L̂(h_m)`.
    pub fn expected_loss(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.losses.values())
            .map(|(w, l)| w * l)
            .sum()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let record = PosteriorRecord {
            beta: self.beta,
            n: self.n,
            log_z: self.log_z,
            weights: self.weights.clone(),
            losses: self.losses.values().to_vec(),
            losses_n_used: self.losses.n_used(),
        };
        serde_json::to_writer_pretty(std::fs::File::create(path)?, &record)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let record: PosteriorRecord = serde_json::from_reader(std::fs::File::open(path)?)?;
        Ok(Self {
            weights: record.weights,
            beta: record.beta,
            n: record.n,
            log_z: record.log_z,
            losses: LossVector::from_values(record.losses, record.losses_n_used)?,
        })
    }
}

/// Softmax of `-β√n · losses` with the max-shift scheme.
pub fn compute_posterior(losses: &LossVector, beta: f64, n: usize) -> Result<PseudoPosterior> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "concentration must be a nonnegative real, got {beta}"
        )));
    }
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n });
    }
    if losses.is_empty() {
        return Err(Error::InvalidParameter("empty loss vector".into()));
    }
    let t = beta * (n as f64).sqrt();
    let exponents: Vec<f64> = losses.values().iter().map(|l| -t * l).collect();
    let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = exponents.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = shifted.iter().sum();
    let weights = shifted.iter().map(|v| v / total).collect();
    Ok(PseudoPosterior {
        weights,
        beta,
        n,
        log_z: max + total.ln(),
        losses: losses.clone(),
    })
}

/// `KL(Q‖uniform) = ln N + Σ_m Q_m ln Q_m`, with `0·ln 0 = 0`.
pub fn kl_to_uniform(q: &PseudoPosterior) -> f64 {
    let n = q.len() as f64;
    let entropy_term: f64 = q
        .weights()
        .iter()
        .map(|&w| if w > 0.0 { w * w.ln() } else { 0.0 })
        .sum();
    (n.ln() + entropy_term).max(0.0)
}

/// `D_μ(Q‖uniform) = N^{μ-1} Σ_m Q_m^μ - 1` for μ > 1; μ = 2 is the
/// chi-square divergence `N Σ Q_m² - 1`.
pub fn f_divergence(q: &PseudoPosterior, mu: f64) -> Result<f64> {
    if !(mu > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "f-divergence order must exceed 1, got {mu}"
        )));
    }
    let n = q.len() as f64;
    let moment: f64 = q.weights().iter().map(|&w| w.powf(mu)).sum();
    Ok((n.powf(mu - 1.0) * moment - 1.0).max(0.0))
}

/// Chi-square divergence to the uniform prior (the μ = 2 case).
pub fn chi_square(q: &PseudoPosterior) -> f64 {
    f_divergence(q, 2.0).expect("mu = 2 is always valid")
}

/// Draw `n_draws` frequencies with replacement according to the
/// posterior weights, by inverse-CDF over the cumulative weights.
/// Duplicates are expected; the draw is deterministic for a fixed seed.
pub fn resample(
    q: &PseudoPosterior,
    freqs: &FrequencySet,
    n_draws: usize,
    seed: u64,
) -> Result<FrequencySet> {
    if q.len() != freqs.n_freqs() {
        return Err(Error::DimensionMismatch {
            expected: freqs.n_freqs(),
            got: q.len(),
        });
    }
    if n_draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let mut cumulative = Vec::with_capacity(q.len());
    let mut acc = 0.0;
    for &w in q.weights() {
        acc += w;
        cumulative.push(acc);
    }
    // Guard the tail against rounding so u close to 1 stays in range.
    *cumulative.last_mut().expect("non-empty") = 1.0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omegas = ndarray::Array2::zeros((n_draws, freqs.dim()));
    for mut row in omegas.rows_mut() {
        let u: f64 = rng.gen_range(0.0..1.0);
        let idx = cumulative.partition_point(|&c| c < u).min(q.len() - 1);
        row.assign(&freqs.omegas().row(idx));
    }
    FrequencySet::new(omegas, *freqs.prior(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{sample_frequencies, GaussianPrior};

    fn losses(values: &[f64], n_used: usize) -> LossVector {
        LossVector::from_values(values.to_vec(), n_used).unwrap()
    }

    #[test]
    fn beta_zero_gives_uniform() {
        let q = compute_posterior(&losses(&[0.1, 0.9, 0.4, 0.2], 10), 0.0, 10).unwrap();
        for &w in q.weights() {
            assert_eq!(w, 0.25);
        }
    }

    #[test]
    fn equal_losses_give_uniform() {
        let q = compute_posterior(&losses(&[0.37; 8], 50), 3.0, 50).unwrap();
        for &w in q.weights() {
            assert!((w - 0.125).abs() < 1e-14);
        }
    }

    #[test]
    fn two_atom_softmax_hand_value() {
        // beta*sqrt(n) = 1 with losses (0, 1).
        let q = compute_posterior(&losses(&[0.0, 1.0], 4), 0.5, 4).unwrap();
        let e = (-1.0f64).exp();
        assert!((q.weights()[0] - 1.0 / (1.0 + e)).abs() < 1e-9);
        assert!((q.weights()[1] - e / (1.0 + e)).abs() < 1e-9);
        assert!((q.weights()[0] - 0.731059).abs() < 1e-6);
        assert!((q.weights()[1] - 0.268941).abs() < 1e-6);
    }

    #[test]
    fn weights_are_normalized_and_anti_monotone() {
        let lv = losses(&[0.3, 0.1, 0.9, 0.1, 0.5], 100);
        let q = compute_posterior(&lv, 2.0, 100).unwrap();
        let sum: f64 = q.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
        for a in 0..5 {
            for b in 0..5 {
                let (la, lb) = (lv.values()[a], lv.values()[b]);
                if la < lb {
                    assert!(q.weights()[a] > q.weights()[b]);
                } else if la == lb {
                    assert!((q.weights()[a] - q.weights()[b]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let base = [0.2, 0.7, 0.4, 0.05];
        let shifted: Vec<f64> = base.iter().map(|l| l + 0.25).collect();
        let qa = compute_posterior(&losses(&base, 30), 1.5, 30).unwrap();
        let qb = compute_posterior(&losses(&shifted, 30), 1.5, 30).unwrap();
        for (a, b) in qa.weights().iter().zip(qb.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn large_beta_concentrates_on_minimum() {
        let lv = losses(&[0.4, 0.1, 0.8, 0.6], 100_000_000);
        // beta*sqrt(n) = 1e4
        let q = compute_posterior(&lv, 1.0, 100_000_000).unwrap();
        assert!(q.weights()[1] >= 1.0 - 1e-6);
    }

    #[test]
    fn extreme_exponents_stay_finite() {
        // t*loss far beyond exp range without the max shift.
        let lv = losses(&[0.0, 1.0], 4_000_000);
        let q = compute_posterior(&lv, 1000.0, 4_000_000).unwrap();
        assert!(q.weights().iter().all(|w| w.is_finite()));
        assert!((q.weights()[0] - 1.0).abs() < 1e-12);
        assert!(q.log_z().is_finite());
    }

    #[test]
    fn kl_values() {
        let uniform = compute_posterior(&losses(&[0.5; 8], 10), 1.0, 10).unwrap();
        assert_eq!(kl_to_uniform(&uniform), 0.0);

        // Near point mass on one of 8 atoms.
        let lv = losses(&[0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 1_000_000);
        let point = compute_posterior(&lv, 100.0, 1_000_000).unwrap();
        assert!((kl_to_uniform(&point) - (8.0f64).ln()).abs() < 1e-6);

        let two = compute_posterior(&losses(&[0.0, 1.0], 4), 0.5, 4).unwrap();
        let (w0, w1) = (0.731059f64, 0.268941f64);
        let expected = (2.0f64).ln() + w0 * w0.ln() + w1 * w1.ln();
        assert!((kl_to_uniform(&two) - expected).abs() < 1e-5);
        assert!((kl_to_uniform(&two) - 0.110934).abs() < 1e-4);
    }

    #[test]
    fn f_divergence_values() {
        let uniform = compute_posterior(&losses(&[0.5; 6], 10), 1.0, 10).unwrap();
        for mu in [1.5, 2.0, 3.0] {
            assert!(f_divergence(&uniform, mu).unwrap().abs() < 1e-12);
        }

        let lv = losses(&[0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 1_000_000);
        let point = compute_posterior(&lv, 100.0, 1_000_000).unwrap();
        assert!((f_divergence(&point, 2.0).unwrap() - 7.0).abs() < 1e-5);

        let two = compute_posterior(&losses(&[0.0, 1.0], 4), 0.5, 4).unwrap();
        let (w0, w1) = (0.731059f64, 0.268941f64);
        let expected = 2.0 * (w0 * w0 + w1 * w1) - 1.0;
        assert!((chi_square(&two) - expected).abs() < 1e-5);
        assert!((chi_square(&two) - 0.21360).abs() < 1e-4);

        assert!(f_divergence(&two, 1.0).is_err());
        assert!(f_divergence(&two, 0.5).is_err());
    }

    #[test]
    fn divergences_respect_ranges() {
        let lv = losses(&[0.1, 0.2, 0.3, 0.4, 0.9, 0.05], 50);
        for beta in [0.0, 0.3, 1.0, 10.0] {
            let q = compute_posterior(&lv, beta, 50).unwrap();
            let kl = kl_to_uniform(&q);
            assert!(kl >= 0.0 && kl <= (6.0f64).ln() + 1e-12);
            let chi = chi_square(&q);
            assert!(chi >= 0.0 && chi <= 5.0 + 1e-12);
        }
    }

    #[test]
    fn resample_point_mass_and_determinism() {
        let prior = GaussianPrior::new(1.0, 3).unwrap();
        let freqs = sample_frequencies(&prior, 6, 12).unwrap();
        let lv = losses(&[0.0, 1.0, 1.0, 1.0, 1.0, 1.0], 1_000_000);
        let point = compute_posterior(&lv, 100.0, 1_000_000).unwrap();
        let out = resample(&point, &freqs, 12, 5).unwrap();
        for row in out.omegas().rows() {
            for (a, b) in row.iter().zip(freqs.omegas().row(0).iter()) {
                assert_eq!(a, b);
            }
        }
        let again = resample(&point, &freqs, 12, 5).unwrap();
        assert_eq!(out.omegas(), again.omegas());
    }

    #[test]
    fn resample_uniform_matches_binomial_band() {
        let prior = GaussianPrior::new(1.0, 1).unwrap();
        let freqs = sample_frequencies(&prior, 4, 8).unwrap();
        let q = compute_posterior(&losses(&[0.5; 4], 10), 0.0, 10).unwrap();
        let out = resample(&q, &freqs, 40_000, 3).unwrap();
        let mut counts = [0usize; 4];
        for row in out.omegas().rows() {
            let idx = (0..4)
                .find(|&m| row[0] == freqs.omegas()[[m, 0]])
                .expect("resampled row matches a source atom");
            counts[idx] += 1;
        }
        for c in counts {
            let frac = c as f64 / 40_000.0;
            assert!((0.2375..=0.2625).contains(&frac), "frac {frac}");
        }
    }

    #[test]
    fn posterior_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let q = compute_posterior(&losses(&[0.2, 0.4, 0.1], 20), 1.3, 20).unwrap();
        let path = dir.path().join("posterior.json");
        q.save(&path).unwrap();
        let loaded = PseudoPosterior::load(&path).unwrap();
        assert_eq!(loaded.beta(), 1.3);
        assert_eq!(loaded.n(), 20);
        for (a, b) in q.weights().iter().zip(loaded.weights()) {
            assert_eq!(a, b);
        }
    }
}
