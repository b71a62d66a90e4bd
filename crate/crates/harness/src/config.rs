use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Which experiment family to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    ToyLandmarks,
    LandmarksTable,
    GreedyCurves,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// CSV dataset path; synthetic pipelines generate data when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub label_column: usize,
    pub has_header: bool,
    pub pipeline: Pipeline,
    pub sigma_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub d_grid: Vec<usize>,
    /// Increasing feature-count ladder for the resampling curves.
    pub d_ladder: Vec<usize>,
    /// Resample counts expressed as fractions of the pool size.
    pub rho_grid: Vec<f64>,
    /// Pool size for the resampling pipeline.
    pub n_pool: usize,
    pub landmark_fraction: f64,
    /// Landmark-count fractions for the sweep emitted by the table pipeline.
    pub sweep_fractions: Vec<f64>,
    pub run_sweep: bool,
    /// Fixed kernel width; when unset it is selected on the validation split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub epochs: usize,
    /// Samples drawn per synthetic dataset.
    pub n_synthetic: usize,
    pub seeds: Vec<u64>,
    pub eps: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            label_column: 0,
            has_header: true,
            pipeline: Pipeline::LandmarksTable,
            sigma_grid: log_grid(-7, 2),
            beta_grid: log_grid(-3, 3),
            c_grid: log_grid(-5, 4),
            d_grid: vec![8, 16, 32, 64, 128],
            d_ladder: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000],
            rho_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            n_pool: 5000,
            landmark_fraction: 0.10,
            sweep_fractions: vec![0.01, 0.02, 0.05, 0.10, 0.15, 0.20, 0.25],
            run_sweep: true,
            sigma: None,
            train_fraction: 0.60,
            valid_fraction: 0.15,
            test_fraction: 0.25,
            epochs: 10,
            n_synthetic: 600,
            seeds: (0..5).collect(),
            eps: 0.05,
            output_dir: PathBuf::from("results"),
        }
    }
}

/// Powers of ten from 10^lo to 10^hi inclusive.
pub fn log_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 10f64.powi(e)).collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).context("parsing TOML config")?,
            _ => serde_json::from_str(&text).context("parsing JSON config")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Full-scale settings: larger pool, full synthetic sets.
    pub fn scale_up(&mut self) {
        self.n_pool = 20000;
        self.n_synthetic = 4000;
        self.seeds = (0..10).collect();
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [
            ("sigma_grid", &self.sigma_grid),
            ("beta_grid", &self.beta_grid),
            ("c_grid", &self.c_grid),
            ("rho_grid", &self.rho_grid),
        ] {
            if grid.is_empty() {
                bail!("{name} must be non-empty");
            }
            if grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
                bail!("{name} entries must be finite and nonnegative");
            }
        }
        if self.d_grid.is_empty() || self.d_ladder.is_empty() {
            bail!("d_grid and d_ladder must be non-empty");
        }
        let max_d = self
            .d_grid
            .iter()
            .chain(&self.d_ladder)
            .copied()
            .max()
            .unwrap();
        if self.n_pool < max_d {
            bail!("n_pool ({}) must be >= the largest D ({max_d})", self.n_pool);
        }
        if !(self.landmark_fraction > 0.0 && self.landmark_fraction <= 1.0) {
            bail!("landmark_fraction must lie in (0, 1]");
        }
        if self.seeds.is_empty() {
            bail!("seeds must be non-empty");
        }
        if self.epochs == 0 {
            bail!("epochs must be >= 1");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            bail!("eps must lie in (0, 1)");
        }
        let frac_sum = self.train_fraction + self.valid_fraction + self.test_fraction;
        if (frac_sum - 1.0).abs() > 1e-9 {
            bail!("split fractions must sum to 1");
        }
        Ok(())
    }
}
