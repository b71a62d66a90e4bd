use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use pbrff::bounds::BoundReport;

/// One experiment cell: every hyperparameter that produced the errors is
/// recorded so the row can be rerun verbatim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub pipeline: String,
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub sigma: f64,
    pub beta: Option<f64>,
    pub c: f64,
    pub d: Option<usize>,
    pub n_landmarks: Option<usize>,
    pub landmark_fraction: Option<f64>,
    pub selection: Option<String>,
    pub epochs: usize,
    pub train_error: f64,
    pub valid_error: Option<f64>,
    pub test_error: f64,
    pub wall_time_s: f64,
}

impl ResultRow {
    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("train_error", Some(self.train_error)),
            ("valid_error", self.valid_error),
            ("test_error", Some(self.test_error)),
        ] {
            if let Some(v) = v {
                anyhow::ensure!((0.0..=1.0).contains(&v), "{name} {v} outside [0, 1]");
            }
        }
        Ok(())
    }
}

/// A bound evaluation tied back to the run that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundRecord {
    pub pipeline: String,
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub landmark: Option<usize>,
    pub report: BoundReport,
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    for row in rows {
        row.check()?;
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_bounds_jsonl(path: &Path, records: &[BoundRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// A rectangular value grid over a 2-D box, written as CSV with x/y/value
/// columns for external plotting.
pub fn write_surface_csv(
    path: &Path,
    xs: &[f64],
    ys: &[f64],
    values: &ndarray::Array2<f64>,
) -> Result<()> {
    anyhow::ensure!(
        values.nrows() == ys.len() && values.ncols() == xs.len(),
        "surface shape {:?} does not match axes {}x{}",
        values.dim(),
        ys.len(),
        xs.len()
    );
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["x", "y", "value"])?;
    for (i, &y) in ys.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            writer.write_record(&[x.to_string(), y.to_string(), values[[i, j]].to_string()])?;
        }
    }
    writer.flush()?;
    Ok(())
}
