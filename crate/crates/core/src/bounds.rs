//! PAC-Bayes bound values for kernel-alignment losses.
//!
//! All bounds are pure arithmetic over already-computed (empirical loss,
//! divergence) pairs; losses are never recomputed here, so a harness can
//! report several bounds per run cheaply.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which bound formula produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// First-order per-landmark bound, optionally union-bounded over
    /// `n_L` landmarks through the `ln(n_L/ε)` term.
    PerLandmark,
    /// First-order global bound with the `2/t` factor and `ln((n+1)/ε)`.
    GlobalKl,
    /// Second-order U-statistics bound with `t²/(2n)` and `ln(1/ε)`.
    UStat,
    /// Second-order f-divergence bound of order μ > 1 (two-case slack).
    FDiv,
    /// Chi-square specialization (μ = 2) with closed-root slack.
    ChiSquare,
}

/// Parameters a bound was evaluated at.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_landmarks: Option<usize>,
}

/// An evaluated bound: `total = empirical_loss + slack`, where `slack`
/// folds the divergence and confidence terms exactly as the cited
/// formula composes them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub empirical_loss: f64,
    pub divergence: f64,
    pub slack: f64,
    pub total: f64,
    pub params: BoundParams,
}

fn check_common(n: usize, eps: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence parameter must lie in (0,1), got {eps}"
        )));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "trade-off parameter must be positive, got {t}"
        )));
    }
    Ok(())
}

/// First-order per-landmark bound:
/// `total = emp + (1/t)(KL + t²/(2(n-1)) + ln(n_L/ε))`.
/// With `n_landmarks = 1` this is the plain single-point statement.
pub fn bound_per_landmark(
    emp: f64,
    kl: f64,
    n: usize,
    t: f64,
    eps: f64,
    n_landmarks: usize,
) -> Result<BoundReport> {
    check_common(n, eps)?;
    check_t(t)?;
    if n_landmarks == 0 {
        return Err(Error::InvalidParameter("need at least one landmark".into()));
    }
    let slack =
        (kl + t * t / (2.0 * (n as f64 - 1.0)) + (n_landmarks as f64 / eps).ln()) / t;
    Ok(BoundReport {
        kind: BoundKind::PerLandmark,
        empirical_loss: emp,
        divergence: kl,
        slack,
        total: emp + slack,
        params: BoundParams {
            n,
            t: Some(t),
            mu: None,
            eps,
            n_landmarks: Some(n_landmarks),
        },
    })
}

/// First-order global bound:
/// `total = emp + (2/t)(KL + t²/(2(n-1)) + ln((n+1)/ε))`.
pub fn bound_global_kl(emp: f64, kl: f64, n: usize, t: f64, eps: f64) -> Result<BoundReport> {
    check_common(n, eps)?;
    check_t(t)?;
    let slack =
        2.0 * (kl + t * t / (2.0 * (n as f64 - 1.0)) + ((n as f64 + 1.0) / eps).ln()) / t;
    Ok(BoundReport {
        kind: BoundKind::GlobalKl,
        empirical_loss: emp,
        divergence: kl,
        slack,
        total: emp + slack,
        params: BoundParams {
            n,
            t: Some(t),
            mu: None,
            eps,
            n_landmarks: None,
        },
    })
}

/// Second-order U-statistics bound:
/// `total = emp + (1/t)(KL + t²/(2n) + ln(1/ε))`.
pub fn bound_u_stat(emp: f64, kl: f64, n: usize, t: f64, eps: f64) -> Result<BoundReport> {
    check_common(n, eps)?;
    check_t(t)?;
    let slack = (kl + t * t / (2.0 * n as f64) + (1.0 / eps).ln()) / t;
    Ok(BoundReport {
        kind: BoundKind::UStat,
        empirical_loss: emp,
        divergence: kl,
        slack,
        total: emp + slack,
        params: BoundParams {
            n,
            t: Some(t),
            mu: None,
            eps,
            n_landmarks: None,
        },
    })
}

/// Second-order f-divergence bound with the two-case slack:
/// `(1/(2√n))^{μ-1} (D_μ+1)^{1/μ} (1/ε)^{1-1/μ}` for 1 < μ ≤ 2, and
/// `(1/(4n))^{1-1/μ} (D_μ+1)^{1/μ} (1/ε)^{1-1/μ}` for μ > 2.
pub fn bound_f_div(emp: f64, d_mu: f64, n: usize, mu: f64, eps: f64) -> Result<BoundReport> {
    check_common(n, eps)?;
    if !(mu > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "f-divergence order must exceed 1, got {mu}"
        )));
    }
    if d_mu < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "divergence must be nonnegative, got {d_mu}"
        )));
    }
    let nf = n as f64;
    let moment_term = (d_mu + 1.0).powf(1.0 / mu) * (1.0 / eps).powf(1.0 - 1.0 / mu);
    let slack = if mu <= 2.0 {
        (1.0 / (2.0 * nf.sqrt())).powf(mu - 1.0) * moment_term
    } else {
        (1.0 / (4.0 * nf)).powf(1.0 - 1.0 / mu) * moment_term
    };
    Ok(BoundReport {
        kind: BoundKind::FDiv,
        empirical_loss: emp,
        divergence: d_mu,
        slack,
        total: emp + slack,
        params: BoundParams {
            n,
            t: None,
            mu: Some(mu),
            eps,
            n_landmarks: None,
        },
    })
}

/// Chi-square specialization: `total = emp + √((χ²+1)/(4nε))`.
pub fn bound_chi_square(emp: f64, chi2: f64, n: usize, eps: f64) -> Result<BoundReport> {
    check_common(n, eps)?;
    if chi2 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "divergence must be nonnegative, got {chi2}"
        )));
    }
    let slack = ((chi2 + 1.0) / (4.0 * n as f64 * eps)).sqrt();
    Ok(BoundReport {
        kind: BoundKind::ChiSquare,
        empirical_loss: emp,
        divergence: chi2,
        slack,
        total: emp + slack,
        params: BoundParams {
            n,
            t: None,
            mu: Some(2.0),
            eps,
            n_landmarks: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn per_landmark_hand_value() {
        let r = bound_per_landmark(0.3, 0.5, 101, 10.0, 0.05, 1).unwrap();
        let expected_slack = (0.5 + 0.5 + (20.0f64).ln()) / 10.0;
        assert!((r.slack - expected_slack).abs() < 1e-12);
        assert!((r.total - 0.69957).abs() < 1e-5);
    }

    #[test]
    fn per_landmark_slack_at_kl_zero_and_eps_near_one() {
        // kl=0, n_L=1, t=sqrt(n-1), eps -> 1: slack -> 1/(2 sqrt(n-1)).
        let n = 50;
        let t = (n as f64 - 1.0).sqrt();
        let r = bound_per_landmark(0.0, 0.0, n, t, 1.0 - 1e-12, 1).unwrap();
        assert!((r.slack - 1.0 / (2.0 * t)).abs() < 1e-9);
    }

    #[test]
    fn per_landmark_monotone_in_kl() {
        let a = bound_per_landmark(0.2, 0.1, 60, 5.0, 0.1, 3).unwrap();
        let b = bound_per_landmark(0.2, 0.2, 60, 5.0, 0.1, 3).unwrap();
        assert!(b.total > a.total);
    }

    #[test]
    fn global_dominates_per_landmark() {
        let per_landmark = bound_per_landmark(0.3, 0.5, 101, 10.0, 0.05, 1).unwrap();
        let global_kl = bound_global_kl(0.3, 0.5, 101, 10.0, 0.05).unwrap();
        assert!(global_kl.slack > per_landmark.slack);
    }

    #[test]
    fn global_rate_decreases_with_n() {
        let kl = 0.4;
        let mut last = f64::INFINITY;
        for n in [100usize, 1000, 10_000] {
            let t = (n as f64 * (n as f64).ln()).sqrt();
            let r = bound_global_kl(0.0, kl, n, t, 0.05).unwrap();
            assert!(r.slack < last, "slack not decreasing at n={n}");
            last = r.slack;
        }
    }

    #[test]
    fn global_limit_at_ln_one() {
        // kl=0 and eps = (n+1) e^0 would need eps > 1; evaluate the
        // algebra with the log term cancelled: slack = 2 t^2/(2(n-1)) / t = t/(n-1).
        let n = 26;
        let t = 4.0;
        let r = bound_global_kl(0.0, 0.0, n, t, 0.999_999).unwrap();
        let log_term = ((n as f64 + 1.0) / 0.999_999).ln();
        let expected = 2.0 * (t * t / (2.0 * (n as f64 - 1.0)) + log_term) / t;
        assert!((r.slack - expected).abs() < 1e-12);
        // Without the log contribution the slack is exactly t/(n-1).
        assert!((expected - 2.0 * log_term / t - t / (n as f64 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn u_stat_slack_forms() {
        // kl=0, eps -> 1: slack -> t/(2n).
        let r = bound_u_stat(0.0, 0.0, 40, 2.0, 1.0 - 1e-13).unwrap();
        assert!((r.slack - 2.0 / 80.0).abs() < 1e-9);

        // t = sqrt(n): slack = (kl + 1/2 + ln(1/eps))/sqrt(n).
        let n = 400;
        let t = (n as f64).sqrt();
        let r = bound_u_stat(0.1, 0.3, n, t, 0.05).unwrap();
        let expected = (0.3 + 0.5 + (20.0f64).ln()) / t;
        assert!((r.slack - expected).abs() < 1e-12);
    }

    #[test]
    fn u_stat_tighter_than_global_kl_on_grid() {
        for n in [3usize, 10, 100, 1000] {
            for t in [1.0, 2.0, 5.0, 30.0] {
                for kl in [0.0, 0.5, 2.0] {
                    let c = bound_global_kl(0.2, kl, n, t, 0.05).unwrap();
                    let u = bound_u_stat(0.2, kl, n, t, 0.05).unwrap();
                    assert!(
                        u.total <= c.total + 1e-12,
                        "u_stat not tighter at n={n}, t={t}, kl={kl}"
                    );
                }
            }
        }
    }

    #[test]
    fn f_div_mu2_equals_chi2_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let emp = rng.gen_range(0.0..1.0);
            let chi2 = rng.gen_range(0.0..50.0);
            let n = rng.gen_range(2..100_000);
            let eps = rng.gen_range(0.001..0.999);
            let a = bound_f_div(emp, chi2, n, 2.0, eps).unwrap();
            let b = bound_chi_square(emp, chi2, n, eps).unwrap();
            assert!((a.total - b.total).abs() < 1e-12);
        }
    }

    #[test]
    fn f_div_hand_value() {
        let r = bound_f_div(0.0, 0.0, 100, 2.0, 0.05).unwrap();
        assert!((r.slack - (0.05f64).sqrt()).abs() < 1e-12);
        assert!((r.slack - 0.223607).abs() < 1e-6);
    }

    #[test]
    fn f_div_nonincreasing_in_n() {
        for mu in [1.3, 2.0, 2.5, 4.0] {
            let mut last = f64::INFINITY;
            for n in [10usize, 100, 1000, 10_000] {
                let r = bound_f_div(0.0, 1.5, n, mu, 0.1).unwrap();
                assert!(r.slack <= last, "slack increased at mu={mu}, n={n}");
                last = r.slack;
            }
        }
    }

    #[test]
    fn chi2_scaling_and_monotonicity() {
        let a = bound_chi_square(0.0, 2.0, 200, 0.05).unwrap();
        let b = bound_chi_square(0.0, 2.0, 200, 0.0125).unwrap();
        assert!((b.slack / a.slack - 2.0).abs() < 1e-12);

        let c = bound_chi_square(0.0, 3.0, 200, 0.05).unwrap();
        assert!(c.slack > a.slack);
    }

    #[test]
    fn every_bound_total_dominates_empirical_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let emp = rng.gen_range(0.0..1.0);
            let div = rng.gen_range(0.0..10.0);
            let n = rng.gen_range(2..10_000);
            let t = rng.gen_range(0.01..100.0);
            let mu = rng.gen_range(1.001..5.0);
            let eps = rng.gen_range(0.001..0.999);
            for r in [
                bound_per_landmark(emp, div, n, t, eps, 1 + n % 7).unwrap(),
                bound_global_kl(emp, div, n, t, eps).unwrap(),
                bound_u_stat(emp, div, n, t, eps).unwrap(),
                bound_f_div(emp, div, n, mu, eps).unwrap(),
                bound_chi_square(emp, div, n, eps).unwrap(),
            ] {
                assert!(r.total >= r.empirical_loss);
                assert!(r.slack >= 0.0);
            }
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(bound_per_landmark(0.1, 0.1, 10, 0.0, 0.05, 1).is_err());
        assert!(bound_per_landmark(0.1, 0.1, 10, 1.0, 1.5, 1).is_err());
        assert!(bound_per_landmark(0.1, 0.1, 1, 1.0, 0.05, 1).is_err());
        assert!(bound_f_div(0.1, 0.1, 10, 1.0, 0.05).is_err());
        assert!(bound_chi_square(0.1, -0.1, 10, 0.05).is_err());
    }
}
