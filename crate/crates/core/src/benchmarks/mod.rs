//! Synthetic data with known ground truth: planted polynomial systems, a
//! Bouc-Wen hysteretic oscillator and a stirred tank reactor.

mod bouc_wen;
pub mod constants;
mod cstr;
mod inputs;
mod ode;
mod planted;

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interpreter::{InterpretError, ModelExport};
use crate::simulation::{DataSet, SimulationError};

pub use bouc_wen::{generate_bouc_wen, generate_bouc_wen_with, BoucWenOptions};
pub use cstr::{cstr_derivative, cstr_equilibrium, generate_cstr, CstrProtocol};
pub use inputs::{maximum_length_sequence, InputSpec};
pub use ode::{advance, rk4_step};
pub use planted::{generate_planted, PlantedSystem};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("invalid input specification: {0}")]
    Input(String),
    #[error("need more than {lag} samples, got {n}")]
    TooShort { lag: usize, n: usize },
    #[error("true system diverges on the generated input")]
    Divergent,
    #[error("{what} left its physical range at sample {sample}: {value}")]
    OutOfRange { what: &'static str, sample: usize, value: f64 },
    #[error(transparent)]
    Model(#[from] InterpretError),
    #[error(transparent)]
    Data(#[from] SimulationError),
    #[error("metadata: {0}")]
    Metadata(String),
}

/// Ground truth written next to a generated CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub system: String,
    pub seed: u64,
    pub n: usize,
    /// Seconds for Bouc-Wen, minutes for the reactor, 1 for planted systems.
    pub sample_time: f64,
    pub constants_version: u32,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub equations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelExport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_spec: Option<InputSpec>,
    pub noise: String,
    /// Realized signal-to-noise ratio per output in dB; empty when noise-free.
    pub snr_db: Vec<f64>,
}

impl Metadata {
    pub fn to_json_path(&self, path: &Path) -> Result<(), BenchmarkError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| BenchmarkError::Metadata(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| BenchmarkError::Metadata(format!("{}: {e}", path.display())))
    }
}

/// A generated data set with its noise-free outputs.
#[derive(Clone, Debug)]
pub struct Generated {
    pub data: DataSet,
    pub clean: DMatrix<f64>,
    pub meta: Metadata,
}

impl Generated {
    /// Writes `path` as CSV and the metadata beside it as `<stem>.json`.
    pub fn write(&self, path: &Path) -> Result<(), BenchmarkError> {
        self.data.to_csv_path(path)?;
        self.meta.to_json_path(&path.with_extension("json"))
    }
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (sum / n.max(1) as f64).sqrt()
}

/// `20 log₁₀(rms(signal) / rms(noise))` per column.
pub fn snr_db(clean: &DMatrix<f64>, noisy: &DMatrix<f64>) -> Vec<f64> {
    (0..clean.ncols())
        .map(|j| {
            let s = rms(clean.column(j).iter().copied());
            let e = rms(clean.column(j).iter().zip(noisy.column(j).iter()).map(|(a, b)| b - a));
            20.0 * (s / e).log10()
        })
        .collect()
}

/// RMS of the difference between two equally shaped matrices.
pub fn rms_difference(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    rms(a.iter().zip(b.iter()).map(|(x, y)| x - y))
}
