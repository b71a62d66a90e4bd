//! Landmark selection, per-landmark pseudo-posteriors, and the ψ
//! similarity map, plus the plain RBF landmark baseline.
//!
//! Each landmark carries its own frequency set and posterior, so
//! coordinate `l` of ψ(x) is the learned similarity
//! `Σ_m Q^l_m cos(ω^l_m·(x_l - x))`.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_per_landmark, BoundReport};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::fourier::{expected_kernel, rbf_kernel, sample_frequencies, FrequencySet, GaussianPrior};
use crate::loss::landmark_loss;
use crate::posterior::{compute_posterior, kl_to_uniform, PseudoPosterior};

/// How landmarks were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkSelection {
    Random,
    KMeans,
}

/// A landmark point with its class id. `train_index` is set when the
/// landmark is an actual training row (then that row is excluded from
/// its own loss); k-means centroids are synthetic and compare against
/// every training sample.
#[derive(Debug, Clone)]
pub struct Landmark {
    pub x: Array1<f64>,
    pub label: usize,
    pub train_index: Option<usize>,
}

/// One frequency set and one pseudo-posterior per landmark, defining ψ.
#[derive(Debug, Clone)]
pub struct LandmarkModel {
    landmarks: Vec<Landmark>,
    freqs: Vec<FrequencySet>,
    posteriors: Vec<PseudoPosterior>,
    selection: LandmarkSelection,
    beta: f64,
    sigma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LandmarkManifest {
    sigma: f64,
    beta: f64,
    n_freqs_per_landmark: usize,
    n_landmarks: usize,
    dim: usize,
    selection: LandmarkSelection,
    /// Set for k-means landmarks: synthetic points fall outside the
    /// i.i.d.-landmark assumption of the per-landmark bound.
    heuristic_landmarks: bool,
    /// Landmark labels for centroids come from a majority vote over the
    /// assigned points (ties go to the smallest class id).
    label_rule: String,
}

impl LandmarkModel {
    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn freqs(&self) -> &[FrequencySet] {
        &self.freqs
    }

    pub fn posteriors(&self) -> &[PseudoPosterior] {
        &self.posteriors
    }

    pub fn selection(&self) -> LandmarkSelection {
        self.selection
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_landmarks(&self) -> usize {
        self.landmarks.len()
    }

    /// True when bound reports for this model rest on landmarks that are
    /// not i.i.d. training points (k-means centroids).
    pub fn heuristic_landmarks(&self) -> bool {
        self.selection == LandmarkSelection::KMeans
    }

    /// Serialize to a directory: manifest, landmarks.csv, one frequency
    /// and posterior pair per landmark.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let manifest = LandmarkManifest {
            sigma: self.sigma,
            beta: self.beta,
            n_freqs_per_landmark: self.freqs[0].n_freqs(),
            n_landmarks: self.landmarks.len(),
            dim: self.landmarks[0].x.len(),
            selection: self.selection,
            heuristic_landmarks: self.heuristic_landmarks(),
            label_rule: "majority_vote_ties_to_smallest".into(),
        };
        serde_json::to_writer_pretty(
            std::fs::File::create(dir.join("manifest.json"))?,
            &manifest,
        )?;

        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(dir.join("landmarks.csv"))?;
        for lm in &self.landmarks {
            let mut record: Vec<String> = lm.x.iter().map(|v| format!("{v:.17e}")).collect();
            record.push(lm.label.to_string());
            writer.write_record(&record)?;
        }
        writer.flush()?;

        for (l, (fs, q)) in self.freqs.iter().zip(&self.posteriors).enumerate() {
            fs.save(&dir.join(format!("landmark_{l}_freqs")))?;
            q.save(&dir.join(format!("landmark_{l}_posterior.json")))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: LandmarkManifest =
            serde_json::from_reader(std::fs::File::open(dir.join("manifest.json"))?)?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(dir.join("landmarks.csv"))?;
        let mut landmarks = Vec::new();
        for record in reader.records() {
            let record = record?;
            let cells: Vec<&str> = record.iter().collect();
            let x = cells[..manifest.dim]
                .iter()
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let label = cells[manifest.dim]
                .parse::<usize>()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            landmarks.push(Landmark {
                x: Array1::from(x),
                label,
                train_index: None,
            });
        }
        let mut freqs = Vec::new();
        let mut posteriors = Vec::new();
        for l in 0..manifest.n_landmarks {
            freqs.push(FrequencySet::load(&dir.join(format!("landmark_{l}_freqs")))?);
            posteriors.push(PseudoPosterior::load(
                &dir.join(format!("landmark_{l}_posterior.json")),
            )?);
        }
        Ok(Self {
            landmarks,
            freqs,
            posteriors,
            selection: manifest.selection,
            beta: manifest.beta,
            sigma: manifest.sigma,
        })
    }
}

/// Draw `n_landmarks` distinct training rows uniformly without replacement.
pub fn select_landmarks_random(
    ds: &LabeledDataset,
    n_landmarks: usize,
    seed: u64,
) -> Result<Vec<Landmark>> {
    if n_landmarks == 0 || n_landmarks > ds.n() {
        return Err(Error::InvalidParameter(format!(
            "landmark count {n_landmarks} outside [1, {}]",
            ds.n()
        )));
    }
    let mut indices: Vec<usize> = (0..ds.n()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    Ok(indices[..n_landmarks]
        .iter()
        .map(|&i| Landmark {
            x: ds.row(i).to_owned(),
            label: ds.labels()[i],
            train_index: Some(i),
        })
        .collect())
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Lloyd's algorithm with k-means++ seeding. Each centroid's label is
/// the majority label of its assigned points (ties go to the smallest
/// class id); an emptied cluster is re-seeded at the point farthest
/// from its assigned centroid.
pub fn select_landmarks_kmeans(
    ds: &LabeledDataset,
    n_landmarks: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Vec<Landmark>> {
    if n_landmarks == 0 || n_landmarks > ds.n() {
        return Err(Error::InvalidParameter(format!(
            "landmark count {n_landmarks} outside [1, {}]",
            ds.n()
        )));
    }
    let n = ds.n();
    let dim = ds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centroids: Vec<Array1<f64>> = Vec::with_capacity(n_landmarks);
    centroids.push(ds.row(rng.gen_range(0..n)).to_owned());
    let mut nearest_sq: Vec<f64> = (0..n)
        .map(|i| squared_distance(ds.row(i), centroids[0].view()))
        .collect();
    while centroids.len() < n_landmarks {
        let total: f64 = nearest_sq.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut u = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in nearest_sq.iter().enumerate() {
                if u < d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        };
        let c = ds.row(next).to_owned();
        for i in 0..n {
            nearest_sq[i] = nearest_sq[i].min(squared_distance(ds.row(i), c.view()));
        }
        centroids.push(c);
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..max_iters {
        // Assign.
        let mut changed = false;
        for i in 0..n {
            let (best, _) = centroids
                .iter()
                .enumerate()
                .map(|(k, c)| (k, squared_distance(ds.row(i), c.view())))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least one centroid");
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }

        // Update.
        let mut sums = vec![Array1::<f64>::zeros(dim); n_landmarks];
        let mut counts = vec![0usize; n_landmarks];
        for i in 0..n {
            sums[assignment[i]] += &ds.row(i);
            counts[assignment[i]] += 1;
        }
        for k in 0..n_landmarks {
            if counts[k] == 0 {
                // Re-seed at the point farthest from its current centroid.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        squared_distance(ds.row(a), centroids[assignment[a]].view()).total_cmp(
                            &squared_distance(ds.row(b), centroids[assignment[b]].view()),
                        )
                    })
                    .expect("non-empty dataset");
                centroids[k] = ds.row(far).to_owned();
                changed = true;
            } else {
                centroids[k] = &sums[k] / counts[k] as f64;
            }
        }
        if !changed {
            break;
        }
    }

    // Final assignment for the label vote.
    for i in 0..n {
        assignment[i] = centroids
            .iter()
            .enumerate()
            .map(|(k, c)| (k, squared_distance(ds.row(i), c.view())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
            .expect("at least one centroid");
    }
    let landmarks = centroids
        .into_iter()
        .enumerate()
        .map(|(k, x)| {
            let mut votes = vec![0usize; ds.n_classes()];
            for i in 0..n {
                if assignment[i] == k {
                    votes[ds.labels()[i]] += 1;
                }
            }
            let label = votes
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(y, _)| y)
                .expect("at least one class");
            Landmark {
                x,
                label,
                train_index: None,
            }
        })
        .collect();
    Ok(landmarks)
}

/// Within-cluster sum of squares for a centroid set, exposed for
/// monotonicity checks.
pub fn kmeans_objective(ds: &LabeledDataset, centroids: &[Landmark]) -> f64 {
    (0..ds.n())
        .map(|i| {
            centroids
                .iter()
                .map(|c| squared_distance(ds.row(i), c.x.view()))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 step keeps per-landmark streams decorrelated.
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fit one pseudo-posterior per landmark: sample an independent
/// `n_freqs`-row frequency set, compute the per-landmark loss on `ds`,
/// and Gibbs-reweight with concentration `beta`.
///
/// `shared_frequencies` reuses one frequency set for all landmarks
/// (memory economy); independent draws per landmark are the default.
pub fn fit_landmark_model(
    ds: &LabeledDataset,
    landmarks: Vec<Landmark>,
    prior: &GaussianPrior,
    n_freqs: usize,
    beta: f64,
    seed: u64,
    selection: LandmarkSelection,
    shared_frequencies: bool,
) -> Result<LandmarkModel> {
    if landmarks.is_empty() {
        return Err(Error::InvalidParameter("need at least one landmark".into()));
    }
    let shared = if shared_frequencies {
        Some(sample_frequencies(prior, n_freqs, derive_seed(seed, u64::MAX))?)
    } else {
        None
    };
    let fitted: Result<Vec<(FrequencySet, PseudoPosterior)>> = landmarks
        .par_iter()
        .enumerate()
        .map(|(l, lm)| {
            let fs = match &shared {
                Some(fs) => fs.clone(),
                None => sample_frequencies(prior, n_freqs, derive_seed(seed, l as u64))?,
            };
            let losses = landmark_loss(&fs, ds, lm.x.view(), lm.label, lm.train_index)?;
            let q = compute_posterior(&losses, beta, ds.n())?;
            Ok((fs, q))
        })
        .collect();
    let (freqs, posteriors) = fitted?.into_iter().unzip();
    Ok(LandmarkModel {
        landmarks,
        freqs,
        posteriors,
        selection,
        beta,
        sigma: prior.sigma(),
    })
}

/// ψ(x): coordinate `l` is the learned similarity `k̂_{Q^l}(x_l - x)`.
pub fn psi_map(model: &LandmarkModel, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(model.n_landmarks());
    for (l, ((lm, fs), q)) in model
        .landmarks
        .iter()
        .zip(&model.freqs)
        .zip(&model.posteriors)
        .enumerate()
    {
        let delta = &lm.x - &x;
        out[l] = expected_kernel(q.weights(), fs, delta.view())?;
    }
    Ok(out)
}

/// [`psi_map`] applied to every row of a feature matrix.
pub fn psi_map_matrix(model: &LandmarkModel, features: &Array2<f64>) -> Result<Array2<f64>> {
    let rows: Result<Vec<Array1<f64>>> = features
        .rows()
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| psi_map(model, x))
        .collect();
    let rows = rows?;
    let mut out = Array2::zeros((features.nrows(), model.n_landmarks()));
    for (i, row) in rows.into_iter().enumerate() {
        out.row_mut(i).assign(&row);
    }
    Ok(out)
}

/// The prior baseline: coordinate `l` is the exact RBF kernel value
/// `k_σ(x_l, x)`.
pub fn rbf_landmark_map(
    landmarks: &[Landmark],
    sigma: f64,
    x: ArrayView1<'_, f64>,
) -> Array1<f64> {
    Array1::from_iter(
        landmarks
            .iter()
            .map(|lm| rbf_kernel(lm.x.view(), x, sigma)),
    )
}

/// [`rbf_landmark_map`] applied to every row of a feature matrix.
pub fn rbf_landmark_map_matrix(
    landmarks: &[Landmark],
    sigma: f64,
    features: &Array2<f64>,
) -> Array2<f64> {
    let mut out = Array2::zeros((features.nrows(), landmarks.len()));
    for (i, x) in features.rows().into_iter().enumerate() {
        out.row_mut(i).assign(&rbf_landmark_map(landmarks, sigma, x));
    }
    out
}

/// One first-order bound per landmark, union-bounded across the `n_L`
/// posteriors through the shared `ln(n_L/ε)` term.
pub fn landmark_bound_report(
    model: &LandmarkModel,
    ds: &LabeledDataset,
    t: f64,
    eps: f64,
) -> Result<Vec<BoundReport>> {
    let n_landmarks = model.n_landmarks();
    model
        .posteriors
        .iter()
        .map(|q| {
            let emp = q.expected_loss();
            let kl = kl_to_uniform(q);
            bound_per_landmark(emp, kl, ds.n(), t, eps, n_landmarks)
        })
        .collect()
}
