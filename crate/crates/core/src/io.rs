//! Run-directory artifacts: CSV tables, dense state snapshots and the JSON
//! run summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{EnergySample, Family};
use crate::losses::LossBreakdown;
use crate::trainer::{TrainOutcome, TrainTrace};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("run directory {0} is not empty; pass --force to overwrite")]
    NotEmpty(PathBuf),
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    }
}

/// Artifact file-name prefixes that `--force` may replace.
const ARTIFACT_PREFIXES: [&str; 10] = [
    "trace_", "state_", "ckpt_", "summary", "sweep_summary", "energies", "oracle_", "config.toml", "lambda_", "compare",
];

/// Creates `dir` if needed. A non-empty directory is an error unless
/// `force`, in which case earlier artifacts are removed.
pub fn prepare_run_dir(dir: &Path, force: bool) -> Result<(), IoError> {
    if dir.exists() {
        let entries: Vec<_> = fs::read_dir(dir)
            .map_err(fs_err(dir))?
            .collect::<Result<_, _>>()
            .map_err(fs_err(dir))?;
        if !entries.is_empty() && !force {
            return Err(IoError::NotEmpty(dir.to_path_buf()));
        }
        for entry in entries {
            let name = entry.file_name().to_string_lossy().into_owned();
            if ARTIFACT_PREFIXES.iter().any(|p| name.starts_with(p)) {
                let path = entry.path();
                if path.is_dir() {
                    fs::remove_dir_all(&path).map_err(fs_err(&path))?;
                } else {
                    fs::remove_file(&path).map_err(fs_err(&path))?;
                }
            }
        }
    }
    fs::create_dir_all(dir).map_err(fs_err(dir))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(fs_err(path))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    csv::Reader::from_path(path)
        .map_err(csv_err)?
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(fs_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(fs_err(path))
}

/// One row of `trace_n<k>.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub integral: f64,
    pub normalization: f64,
    pub boundary: f64,
    pub orthogonality: f64,
    pub equation: f64,
    pub energy_min: f64,
    pub symmetry: f64,
    pub total: f64,
    pub energy: f64,
}

pub fn trace_rows(trace: &TrainTrace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| {
            let l = &r.losses;
            TraceRow {
                epoch: r.epoch,
                integral: l.integral,
                normalization: l.normalization,
                boundary: l.boundary,
                orthogonality: l.orthogonality,
                equation: l.equation,
                energy_min: l.energy_min,
                symmetry: l.symmetry,
                total: l.total,
                energy: r.energy,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub x: f64,
    pub psi: f64,
}

pub fn point_rows(xs: &[f64], psi: &[f64]) -> Vec<PointRow> {
    xs.iter().zip(psi).map(|(&x, &psi)| PointRow { x, psi }).collect()
}

pub fn trace_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("trace_n{n}.csv"))
}

pub fn state_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("state_n{n}.csv"))
}

/// One trained state in `summary.csv` / `sweep_summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub lambda: f64,
    pub omega_sq: f64,
    pub half_width: f64,
    pub energy: f64,
    pub converged: bool,
    pub epochs: usize,
    pub integral: f64,
    pub normalization: f64,
    pub boundary: f64,
    pub orthogonality: f64,
    pub equation: f64,
    pub energy_min: f64,
    pub symmetry: f64,
    pub total: f64,
}

impl SummaryRow {
    pub fn from_outcome(o: &TrainOutcome) -> Self {
        let l: LossBreakdown = o.final_losses();
        Self {
            n: o.spec.n,
            lambda: o.spec.lambda,
            omega_sq: o.spec.omega_sq,
            half_width: o.spec.half_width,
            energy: o.energy(),
            converged: o.converged(),
            epochs: o.trace.len(),
            integral: l.integral,
            normalization: l.normalization,
            boundary: l.boundary,
            orthogonality: l.orthogonality,
            equation: l.equation,
            energy_min: l.energy_min,
            symmetry: l.symmetry,
            total: l.total,
        }
    }
}

/// `(n, λ, E, source)` rows consumed by the scaling fits. A zero `omega_sq`
/// marks the pure quartic family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub n: usize,
    pub lambda: f64,
    pub energy: f64,
    pub source: String,
    #[serde(default = "default_omega_sq")]
    pub omega_sq: f64,
}

fn default_omega_sq() -> f64 {
    1.0
}

impl EnergyRow {
    pub fn sample(&self) -> EnergySample {
        EnergySample {
            n: self.n,
            lambda: self.lambda,
            energy: self.energy,
            family: if self.omega_sq == 0.0 {
                Family::Quartic
            } else {
                Family::Anharmonic
            },
            source: self.source.clone(),
        }
    }
}

/// Writes the trace and dense snapshot of one finished state into `dir`.
pub fn write_state_artifacts(dir: &Path, outcome: &TrainOutcome) -> Result<(), IoError> {
    write_csv(&trace_path(dir, outcome.spec.n), &trace_rows(&outcome.trace))?;
    if let Ok(snap) = outcome.snapshot() {
        write_csv(&state_path(dir, outcome.spec.n), &point_rows(&snap.grid, &snap.values))?;
    }
    Ok(())
}
