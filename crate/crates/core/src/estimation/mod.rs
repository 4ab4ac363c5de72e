//! Coefficient estimation for a fixed model structure.
//!
//! Every polynomial model is linear in its coefficients, `Ψ = ΦΘ + E`, so
//! least squares is the default. Models with noise factors get one round of
//! extended least squares: fit the noise-free terms, then refit with the
//! noise columns filled by the first fit's residuals. The iterative methods
//! minimize `J = ω_s·E_s + ω_p·E_p` starting from the least-squares fit.

pub mod cmaes;
pub mod nelder_mead;
mod regression;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::Source;
use crate::interpreter::{MonomialTerm, PolynomialModel};
use crate::rng;
use crate::simulation::{self, CompiledModel, DataSet};

pub use regression::{build_regression, least_squares, RegressionProblem};
pub(crate) use regression::build_with_noise;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("regressor matrix is rank deficient; use a positive ridge")]
    RankDeficient,
    #[error("non-finite regressor value in term {0}")]
    NonFinite(String),
    #[error("maximum delay {lag} leaves no samples out of {n}")]
    TooShort { lag: usize, n: usize },
    #[error("model and data channel counts differ")]
    Channels,
    #[error("no estimation data")]
    NoData,
    #[error("invalid estimator configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    LeastSquares,
    Cmaes,
    LocalRefine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaesConfig {
    /// `None` uses `4 + ⌊3 ln n⌋`.
    pub population: Option<usize>,
    pub max_evals: usize,
    /// `None` uses 0.3 × the largest least-squares coefficient magnitude.
    pub initial_sigma: Option<f64>,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        CmaesConfig {
            population: None,
            max_evals: 2000,
            initial_sigma: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub max_evals: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { max_evals: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub method: Method,
    /// `[ω_s, ω_p]`.
    pub weights: [f64; 2],
    pub ridge: f64,
    pub cmaes: CmaesConfig,
    pub local_refine: RefineConfig,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            method: Method::LeastSquares,
            weights: [0.0, 1.0],
            ridge: 1e-8,
            cmaes: CmaesConfig::default(),
            local_refine: RefineConfig::default(),
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimationError> {
        let [ws, wp] = self.weights;
        if !(ws >= 0.0 && wp >= 0.0 && ws.is_finite() && wp.is_finite()) || ws + wp == 0.0 {
            return Err(EstimationError::Config(format!(
                "weights must be non-negative and not both zero, got [{ws}, {wp}]"
            )));
        }
        if self.method == Method::LeastSquares && self.weights != [0.0, 1.0] {
            return Err(EstimationError::Config(
                "least squares minimizes the prediction error only; weights must be [0, 1]".into(),
            ));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(EstimationError::Config(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if self.cmaes.initial_sigma.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return Err(EstimationError::Config("cmaes.initial_sigma must be positive".into()));
        }
        if self.cmaes.population.is_some_and(|p| p < 2) {
            return Err(EstimationError::Config("cmaes.population must be at least 2".into()));
        }
        Ok(())
    }
}

/// Estimates coefficients of `m` on one data set.
pub fn estimate(m: &PolynomialModel, d: &DataSet, cfg: &EstimatorConfig) -> Result<PolynomialModel, EstimationError> {
    estimate_sets(m, std::slice::from_ref(d), cfg)
}

/// Estimates coefficients of `m` jointly over several data sets.
pub fn estimate_sets(
    m: &PolynomialModel,
    sets: &[DataSet],
    cfg: &EstimatorConfig,
) -> Result<PolynomialModel, EstimationError> {
    cfg.validate()?;
    if sets.is_empty() {
        return Err(EstimationError::NoData);
    }
    let r = m.channels().outputs;
    for d in sets {
        if d.outputs() != r || d.inputs() != m.channels().inputs {
            return Err(EstimationError::Channels);
        }
        if m.max_lag() >= d.len() {
            return Err(EstimationError::TooShort { lag: m.max_lag(), n: d.len() });
        }
    }
    if m.is_empty() {
        return Ok(m.without_theta().with_theta(DMatrix::zeros(0, r)).expect("shape"));
    }
    let theta = least_squares_fit(m, sets, cfg.ridge)?;
    let theta = match cfg.method {
        Method::LeastSquares => theta,
        Method::Cmaes => {
            let sigma = cfg
                .cmaes
                .initial_sigma
                .unwrap_or_else(|| 0.3 * theta.amax().max(1e-3));
            let opts = cmaes::CmaesOptions {
                population: cfg.cmaes.population,
                max_evals: cfg.cmaes.max_evals,
                sigma0: sigma,
            };
            let objective = Objective::new(m, sets, cfg.weights);
            let mut rng = rng::substream(cfg.seed, &[0x636d_6165]);
            let res = cmaes::minimize(|x| objective.eval(x), theta.as_slice(), &opts, &mut rng);
            DMatrix::from_column_slice(theta.nrows(), r, &res.x)
        }
        Method::LocalRefine => {
            let objective = Objective::new(m, sets, cfg.weights);
            let steps: Vec<f64> = theta.iter().map(|v| 0.1 * v.abs().max(1e-3)).collect();
            let res = nelder_mead::minimize(
                |x| objective.eval(x),
                theta.as_slice(),
                &steps,
                cfg.local_refine.max_evals,
                1e-14,
            );
            DMatrix::from_column_slice(theta.nrows(), r, &res.x)
        }
    };
    Ok(m.without_theta().with_theta(theta).expect("shape"))
}

/// Least squares, extended by one residual pass when the model has noise
/// factors.
fn least_squares_fit(m: &PolynomialModel, sets: &[DataSet], ridge: f64) -> Result<DMatrix<f64>, EstimationError> {
    let noise = m.channels().noise;
    let residuals: Vec<DMatrix<f64>> = if m.uses(Source::Xi) {
        let plain_terms: Vec<MonomialTerm> = m
            .terms()
            .iter()
            .filter(|t| t.factors().iter().all(|f| f.source != Source::Xi))
            .cloned()
            .collect();
        let plain = PolynomialModel::new(plain_terms, m.channels());
        let zeros: Vec<DMatrix<f64>> = sets.iter().map(|d| DMatrix::zeros(d.len(), noise)).collect();
        let theta = if plain.is_empty() {
            DMatrix::zeros(0, m.channels().outputs)
        } else {
            let pairs: Vec<(&DataSet, &DMatrix<f64>)> = sets.iter().zip(&zeros).collect();
            least_squares(&build_with_noise(&plain, &pairs)?, ridge)?
        };
        let compiled = CompiledModel::new(&plain);
        sets.iter()
            .map(|d| {
                let resid = d.y() - compiled.predict(&theta, d);
                // transient rows have no residual
                let mut resid = resid;
                resid.rows_mut(0, compiled.max_lag().min(d.len())).fill(0.0);
                resid
            })
            .collect()
    } else {
        sets.iter().map(|d| DMatrix::zeros(d.len(), noise)).collect()
    };
    let pairs: Vec<(&DataSet, &DMatrix<f64>)> = sets.iter().zip(&residuals).collect();
    least_squares(&build_with_noise(m, &pairs)?, ridge)
}

/// `J = ω_s·E_s + ω_p·E_p`, averaged over data sets; zero weights skip
/// their response entirely.
struct Objective<'a> {
    compiled: CompiledModel,
    sets: &'a [DataSet],
    weights: [f64; 2],
    rows: usize,
    cols: usize,
}

impl<'a> Objective<'a> {
    fn new(m: &PolynomialModel, sets: &'a [DataSet], weights: [f64; 2]) -> Self {
        Objective {
            compiled: CompiledModel::new(m),
            sets,
            weights,
            rows: m.len(),
            cols: m.channels().outputs,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let theta = DMatrix::from_column_slice(self.rows, self.cols, x);
        let [ws, wp] = self.weights;
        let mut total = 0.0;
        for d in self.sets {
            if ws > 0.0 {
                total += ws * simulation::simulation_error(&self.compiled, &theta, d);
            }
            if wp > 0.0 {
                total += wp * simulation::prediction_error(&self.compiled, &theta, d);
            }
        }
        total / self.sets.len() as f64
    }
}
