//! Frequency sampling from the Gaussian kernel's Fourier transform,
//! trigonometric hypotheses, and the cos/sin random feature map.
//!
//! The Gaussian kernel `k_σ(δ) = exp(-‖δ‖²/(2σ²))` has spectral density
//! `N(0, σ⁻² I)`; sampling frequencies from it and averaging
//! `cos(ω·(x-x'))` Monte-Carlo-approximates the kernel.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral density of a shift-invariant kernel, used as a prior over
/// trigonometric hypotheses. Implementors fill one frequency row per call.
pub trait ShiftInvariantPrior {
    fn input_dim(&self) -> usize;
    fn fill_frequency(&self, rng: &mut ChaCha8Rng, row: ArrayViewMut1<'_, f64>);
}

/// The Gaussian (RBF) kernel prior: `ω ~ N(0, σ⁻² I)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GaussianPrior {
    sigma: f64,
    dim: usize,
}

impl GaussianPrior {
    pub fn new(sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kernel bandwidth must be positive, got {sigma}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("input dimension must be >= 1".into()));
        }
        Ok(Self { sigma, dim })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl ShiftInvariantPrior for GaussianPrior {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn fill_frequency(&self, rng: &mut ChaCha8Rng, mut row: ArrayViewMut1<'_, f64>) {
        let scale = 1.0 / self.sigma;
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = scale * z;
        }
    }
}

/// A matrix of sampled frequency vectors together with the prior and the
/// seed that generated them.
#[derive(Debug, Clone)]
pub struct FrequencySet {
    omegas: Array2<f64>,
    prior: GaussianPrior,
    seed: u64,
}

/// JSON sidecar stored next to the frequency matrix for experiment resumption.
#[derive(Debug, Serialize, Deserialize)]
struct FrequencySidecar {
    sigma: f64,
    seed: u64,
    n_freqs: usize,
    dim: usize,
}

impl FrequencySet {
    pub fn new(omegas: Array2<f64>, prior: GaussianPrior, seed: u64) -> Result<Self> {
        if omegas.nrows() == 0 {
            return Err(Error::InvalidParameter("frequency set must be non-empty".into()));
        }
        if omegas.ncols() != prior.dim() {
            return Err(Error::DimensionMismatch {
                expected: prior.dim(),
                got: omegas.ncols(),
            });
        }
        if omegas.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite frequency".into()));
        }
        Ok(Self {
            omegas,
            prior,
            seed,
        })
    }

    pub fn omegas(&self) -> &Array2<f64> {
        &self.omegas
    }

    pub fn prior(&self) -> &GaussianPrior {
        &self.prior
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_freqs(&self) -> usize {
        self.omegas.nrows()
    }

    pub fn dim(&self) -> usize {
        self.omegas.ncols()
    }

    /// Write the matrix as CSV next to a JSON sidecar (`<base>.csv`, `<base>.json`).
    pub fn save(&self, base: &Path) -> Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(base.with_extension("csv"))?;
        for row in self.omegas.rows() {
            writer.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        writer.flush()?;
        let sidecar = FrequencySidecar {
            sigma: self.prior.sigma(),
            seed: self.seed,
            n_freqs: self.n_freqs(),
            dim: self.dim(),
        };
        let file = std::fs::File::create(base.with_extension("json"))?;
        serde_json::to_writer_pretty(file, &sidecar)?;
        Ok(())
    }

    pub fn load(base: &Path) -> Result<Self> {
        let sidecar: FrequencySidecar =
            serde_json::from_reader(std::fs::File::open(base.with_extension("json"))?)?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(base.with_extension("csv"))?;
        let mut values = Vec::with_capacity(sidecar.n_freqs * sidecar.dim);
        for record in reader.records() {
            for cell in record?.iter() {
                values.push(cell.parse::<f64>().map_err(|_| Error::Parse {
                    line: values.len() / sidecar.dim + 1,
                    column: values.len() % sidecar.dim,
                    message: format!("cannot parse {cell:?} as a number"),
                })?);
            }
        }
        let omegas = Array2::from_shape_vec((sidecar.n_freqs, sidecar.dim), values)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::new(omegas, GaussianPrior::new(sidecar.sigma, sidecar.dim)?, sidecar.seed)
    }
}

/// Draw `n_freqs` i.i.d. frequencies from the prior, reproducibly for a
/// fixed seed (counter-based generator, identical across platforms).
pub fn sample_frequencies(prior: &GaussianPrior, n_freqs: usize, seed: u64) -> Result<FrequencySet> {
    if n_freqs == 0 {
        return Err(Error::InvalidParameter("need at least one frequency".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omegas = Array2::zeros((n_freqs, prior.dim()));
    for row in omegas.rows_mut() {
        prior.fill_frequency(&mut rng, row);
    }
    FrequencySet::new(omegas, *prior, seed)
}

/// The trigonometric hypothesis `h_ω(δ) = cos(ω·δ)`.
pub fn hypothesis_eval(omega: ArrayView1<'_, f64>, delta: ArrayView1<'_, f64>) -> Result<f64> {
    if omega.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            expected: omega.len(),
            got: delta.len(),
        });
    }
    Ok(omega.dot(&delta).cos())
}

/// Map `x` to the unit-norm cos/sin feature vector in `R^{2D}`:
/// first `D` coordinates `cos(ω_m·x)/√D`, then `sin(ω_m·x)/√D`.
pub fn rff_map(x: ArrayView1<'_, f64>, freqs: &FrequencySet) -> Result<Array1<f64>> {
    if x.len() != freqs.dim() {
        return Err(Error::DimensionMismatch {
            expected: freqs.dim(),
            got: x.len(),
        });
    }
    let d = freqs.n_freqs();
    let scale = 1.0 / (d as f64).sqrt();
    let projections = freqs.omegas().dot(&x);
    let mut out = Array1::zeros(2 * d);
    for (m, &p) in projections.iter().enumerate() {
        out[m] = p.cos() * scale;
        out[m + d] = p.sin() * scale;
    }
    Ok(out)
}

/// [`rff_map`] applied to every row of a feature matrix.
pub fn rff_map_matrix(features: &Array2<f64>, freqs: &FrequencySet) -> Result<Array2<f64>> {
    if features.ncols() != freqs.dim() {
        return Err(Error::DimensionMismatch {
            expected: freqs.dim(),
            got: features.ncols(),
        });
    }
    let d = freqs.n_freqs();
    let scale = 1.0 / (d as f64).sqrt();
    let projections = features.dot(&freqs.omegas().t());
    let mut out = Array2::zeros((features.nrows(), 2 * d));
    for (i, proj_row) in projections.rows().into_iter().enumerate() {
        for (m, &p) in proj_row.iter().enumerate() {
            out[[i, m]] = p.cos() * scale;
            out[[i, m + d]] = p.sin() * scale;
        }
    }
    Ok(out)
}

/// The exact Gaussian kernel `exp(-‖x-x'‖²/(2σ²))`.
pub fn rbf_kernel(x: ArrayView1<'_, f64>, x_prime: ArrayView1<'_, f64>, sigma: f64) -> f64 {
    let sq_dist: f64 = x
        .iter()
        .zip(x_prime.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    (-sq_dist / (2.0 * sigma * sigma)).exp()
}

/// Weighted average of hypothesis values: `Σ_m w_m cos(ω_m·δ)`.
pub fn expected_kernel(
    weights: &[f64],
    freqs: &FrequencySet,
    delta: ArrayView1<'_, f64>,
) -> Result<f64> {
    if weights.len() != freqs.n_freqs() {
        return Err(Error::DimensionMismatch {
            expected: freqs.n_freqs(),
            got: weights.len(),
        });
    }
    if delta.len() != freqs.dim() {
        return Err(Error::DimensionMismatch {
            expected: freqs.dim(),
            got: delta.len(),
        });
    }
    let projections = freqs.omegas().dot(&delta);
    Ok(weights
        .iter()
        .zip(projections.iter())
        .map(|(w, p)| w * p.cos())
        .sum())
}
