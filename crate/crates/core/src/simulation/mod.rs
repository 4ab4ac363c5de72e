//! Prediction, free-run simulation and fitness metrics.
//!
//! Both responses start from the measured outputs: the first `max_lag`
//! rows of a response are copies of the data, and model evaluation begins
//! at `k = max_lag`, where every regressor refers to a sample inside the
//! record. Those transient rows are excluded from every metric.
//!
//! `E = (1/r_y) Σⱼ √((1/N) Σₖ eⱼ(k)²)`, the per-channel RMS averaged over
//! channels, is used for the simulation error `E_s` and the prediction
//! error `E_p` alike.

mod compiled;
mod data;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::interpreter::PolynomialModel;

pub(crate) use compiled::CompiledModel;
pub use data::DataSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("model coefficients have not been estimated")]
    Unestimated,
    #[error("model has {model} {what} channels, data has {data}")]
    ChannelMismatch { what: &'static str, model: usize, data: usize },
    #[error("maximum delay {lag} leaves no samples out of {n}")]
    TooShort { lag: usize, n: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("output channel {0} has zero variance")]
    ZeroVariance(usize),
    #[error("{0}")]
    Data(String),
}

/// Predicted and simulated responses with their errors.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponsePair {
    pub y_pred: DMatrix<f64>,
    pub y_sim: DMatrix<f64>,
    pub diverged: bool,
    pub e_s: f64,
    pub e_p: f64,
    /// Transient rows excluded from the errors.
    pub skip: usize,
}

impl ResponsePair {
    pub fn errors(&self) -> (f64, f64) {
        (self.e_s, self.e_p)
    }

    /// Simulation BFR over the scored rows; 0 after divergence.
    pub fn bfr(&self, d: &DataSet) -> Result<f64, SimulationError> {
        if self.diverged {
            return Ok(0.0);
        }
        let n = d.len() - self.skip;
        bfr(&d.y().rows(self.skip, n).into_owned(), &self.y_sim.rows(self.skip, n).into_owned())
    }
}

fn check(m: &PolynomialModel, d: &DataSet) -> Result<(), SimulationError> {
    if m.theta().is_none() {
        return Err(SimulationError::Unestimated);
    }
    let c = m.channels();
    if c.outputs != d.outputs() {
        return Err(SimulationError::ChannelMismatch {
            what: "output",
            model: c.outputs,
            data: d.outputs(),
        });
    }
    if c.inputs != d.inputs() {
        return Err(SimulationError::ChannelMismatch {
            what: "input",
            model: c.inputs,
            data: d.inputs(),
        });
    }
    if m.max_lag() >= d.len() {
        return Err(SimulationError::TooShort { lag: m.max_lag(), n: d.len() });
    }
    Ok(())
}

/// One-step-ahead prediction from measured past outputs.
pub fn predict(m: &PolynomialModel, d: &DataSet) -> Result<DMatrix<f64>, SimulationError> {
    check(m, d)?;
    Ok(CompiledModel::new(m).predict(m.theta().unwrap(), d))
}

/// Free-run simulation; the flag reports divergence.
pub fn simulate(m: &PolynomialModel, d: &DataSet) -> Result<(DMatrix<f64>, bool), SimulationError> {
    check(m, d)?;
    Ok(CompiledModel::new(m).simulate(m.theta().unwrap(), d))
}

/// Both responses and `(E_s, E_p)` over rows `max_lag..N`. A diverged
/// simulation scores `E_s = ∞`; a non-finite prediction scores `E_p = ∞`.
pub fn evaluate(m: &PolynomialModel, d: &DataSet) -> Result<ResponsePair, SimulationError> {
    check(m, d)?;
    Ok(evaluate_compiled(&CompiledModel::new(m), m.theta().unwrap(), d))
}

pub(crate) fn evaluate_compiled(c: &CompiledModel, theta: &DMatrix<f64>, d: &DataSet) -> ResponsePair {
    let skip = c.max_lag();
    let n = d.len() - skip;
    let y_pred = c.predict(theta, d);
    let (y_sim, diverged) = c.simulate(theta, d);
    let truth = d.y().rows(skip, n);
    let e_p = mean_channel_rms(&truth.into_owned(), &y_pred.rows(skip, n).into_owned());
    let e_s = if diverged {
        f64::INFINITY
    } else {
        mean_channel_rms(&truth.into_owned(), &y_sim.rows(skip, n).into_owned())
    };
    ResponsePair {
        diverged: diverged || !e_p.is_finite(),
        y_pred,
        y_sim,
        e_s: finite_or_inf(e_s),
        e_p: finite_or_inf(e_p),
        skip,
    }
}

/// Prediction error alone, `∞` when non-finite.
pub(crate) fn prediction_error(c: &CompiledModel, theta: &DMatrix<f64>, d: &DataSet) -> f64 {
    let skip = c.max_lag();
    let n = d.len() - skip;
    let y_pred = c.predict(theta, d);
    finite_or_inf(mean_channel_rms(&d.y().rows(skip, n).into_owned(), &y_pred.rows(skip, n).into_owned()))
}

/// Simulation error alone, `∞` on divergence.
pub(crate) fn simulation_error(c: &CompiledModel, theta: &DMatrix<f64>, d: &DataSet) -> f64 {
    let skip = c.max_lag();
    let n = d.len() - skip;
    let (y_sim, diverged) = c.simulate(theta, d);
    if diverged {
        return f64::INFINITY;
    }
    finite_or_inf(mean_channel_rms(&d.y().rows(skip, n).into_owned(), &y_sim.rows(skip, n).into_owned()))
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

fn mean_channel_rms(truth: &DMatrix<f64>, approx: &DMatrix<f64>) -> f64 {
    let n = truth.nrows() as f64;
    let r = truth.ncols();
    let total: f64 = (0..r)
        .map(|j| {
            let sq: f64 = truth.column(j).iter().zip(approx.column(j).iter()).map(|(a, b)| (a - b).powi(2)).sum();
            (sq / n).sqrt()
        })
        .sum();
    total / r as f64
}

/// `(E_s, E_p)` of given responses against the measurements.
pub fn rms_errors(
    y_true: &DMatrix<f64>,
    y_pred: &DMatrix<f64>,
    y_sim: &DMatrix<f64>,
) -> Result<(f64, f64), SimulationError> {
    for (name, m) in [("prediction", y_pred), ("simulation", y_sim)] {
        if m.shape() != y_true.shape() {
            return Err(SimulationError::Shape(format!(
                "{name} is {:?}, measurements are {:?}",
                m.shape(),
                y_true.shape()
            )));
        }
    }
    if y_true.is_empty() {
        return Err(SimulationError::Shape("no samples".into()));
    }
    Ok((mean_channel_rms(y_true, y_sim), mean_channel_rms(y_true, y_pred)))
}

/// Best fit rate in percent: per channel
/// `100 · max(0, 1 − ‖y − ŷ‖ / ‖y − ȳ‖)`, averaged over channels.
pub fn bfr(y_true: &DMatrix<f64>, y_hat: &DMatrix<f64>) -> Result<f64, SimulationError> {
    if y_true.shape() != y_hat.shape() || y_true.is_empty() {
        return Err(SimulationError::Shape(format!(
            "{:?} vs {:?}",
            y_true.shape(),
            y_hat.shape()
        )));
    }
    let mut total = 0.0;
    for j in 0..y_true.ncols() {
        let col = y_true.column(j);
        let mean = col.mean();
        let spread = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
        if spread == 0.0 {
            return Err(SimulationError::ZeroVariance(j + 1));
        }
        let miss = col.iter().zip(y_hat.column(j).iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let fit = if miss.is_finite() { (1.0 - miss / spread).max(0.0) } else { 0.0 };
        total += 100.0 * fit;
    }
    Ok(total / y_true.ncols() as f64)
}
