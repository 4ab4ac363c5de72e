use nalgebra::DMatrix;

use super::EstimationError;
use crate::interpreter::PolynomialModel;
use crate::simulation::{CompiledModel, DataSet};

/// Linear-in-parameters form `Ψ = ΦΘ + E` of a model over one or more
/// data sets, rows stacked in set order.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionProblem {
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    /// Model term index of each column of `phi`.
    pub column_map: Vec<usize>,
}

impl RegressionProblem {
    pub fn rows(&self) -> usize {
        self.phi.nrows()
    }

    pub fn terms(&self) -> usize {
        self.phi.ncols()
    }

    /// False for the empty model, which has nothing to estimate.
    pub fn is_estimable(&self) -> bool {
        self.phi.ncols() > 0
    }
}

/// Regressors from measured data with the noise columns at zero.
pub fn build_regression(m: &PolynomialModel, d: &DataSet) -> Result<RegressionProblem, EstimationError> {
    let zeros = DMatrix::zeros(d.len(), m.channels().noise);
    build_with_noise(m, &[(d, &zeros)])
}

/// Regressors with the noise columns read from a residual record per set.
pub(crate) fn build_with_noise(
    m: &PolynomialModel,
    sets: &[(&DataSet, &DMatrix<f64>)],
) -> Result<RegressionProblem, EstimationError> {
    let compiled = CompiledModel::new(m);
    let lag = m.max_lag();
    let r = m.channels().outputs;
    let mut blocks = Vec::with_capacity(sets.len());
    let mut rows = 0;
    for (d, xi) in sets {
        if d.outputs() != r || d.inputs() != m.channels().inputs {
            return Err(EstimationError::Channels);
        }
        if lag >= d.len() {
            return Err(EstimationError::TooShort { lag, n: d.len() });
        }
        let phi = compiled.regressors(d, xi);
        if let Some(col) = (0..phi.ncols()).find(|&c| phi.column(c).iter().any(|v| !v.is_finite())) {
            return Err(EstimationError::NonFinite(m.terms()[col].render()));
        }
        rows += phi.nrows();
        blocks.push((phi, d.y().rows(lag, d.len() - lag).into_owned()));
    }
    let mut phi = DMatrix::zeros(rows, m.len());
    let mut psi = DMatrix::zeros(rows, r);
    let mut at = 0;
    for (p, y) in blocks {
        let n = p.nrows();
        phi.rows_mut(at, n).copy_from(&p);
        psi.rows_mut(at, n).copy_from(&y);
        at += n;
    }
    Ok(RegressionProblem {
        phi,
        psi,
        column_map: (0..m.len()).collect(),
    })
}

/// Minimizes `‖Ψ − ΦΘ‖² + ridge·‖Θ‖²` through a QR factorization of the
/// augmented matrix `[Φ; √ridge·I]`.
pub fn least_squares(rp: &RegressionProblem, ridge: f64) -> Result<DMatrix<f64>, EstimationError> {
    if !ridge.is_finite() || ridge < 0.0 {
        return Err(EstimationError::Config(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    let (n, p) = rp.phi.shape();
    let r = rp.psi.ncols();
    if p == 0 {
        return Ok(DMatrix::zeros(0, r));
    }
    let extra = if ridge > 0.0 { p } else { 0 };
    if n + extra < p {
        return Err(EstimationError::RankDeficient);
    }
    let mut a = DMatrix::zeros(n + extra, p);
    a.rows_mut(0, n).copy_from(&rp.phi);
    let mut b = DMatrix::zeros(n + extra, r);
    b.rows_mut(0, n).copy_from(&rp.psi);
    if extra > 0 {
        a.view_mut((n, 0), (p, p)).fill_diagonal(ridge.sqrt());
    }
    let qr = a.qr();
    let rmat = qr.r();
    let diag_max = rmat.diagonal().amax();
    if ridge == 0.0 && (diag_max == 0.0 || rmat.diagonal().iter().any(|d| d.abs() <= 1e-10 * diag_max)) {
        return Err(EstimationError::RankDeficient);
    }
    qr.q_tr_mul(&mut b);
    let rhs = b.rows(0, p).into_owned();
    let theta = rmat
        .solve_upper_triangular(&rhs)
        .ok_or(EstimationError::RankDeficient)?;
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(EstimationError::RankDeficient);
    }
    Ok(theta)
}
