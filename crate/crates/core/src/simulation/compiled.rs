use nalgebra::DMatrix;

use crate::grammar::{NonlinearOp, Source};
use crate::interpreter::PolynomialModel;

use super::DataSet;

struct Factor {
    source: Source,
    delay: usize,
    channels: Vec<usize>,
    wrap: Option<NonlinearOp>,
}

/// Flattened model structure for the per-sample loops.
pub(crate) struct CompiledModel {
    terms: Vec<Vec<Factor>>,
    max_lag: usize,
    outputs: usize,
}

impl CompiledModel {
    pub(crate) fn new(model: &PolynomialModel) -> Self {
        let terms = model
            .terms()
            .iter()
            .map(|t| {
                t.factors()
                    .iter()
                    .map(|f| Factor {
                        source: f.source,
                        delay: f.delay as usize,
                        channels: f.link.channels().collect(),
                        wrap: f.wrap,
                    })
                    .collect()
            })
            .collect();
        CompiledModel {
            terms,
            max_lag: model.max_lag(),
            outputs: model.channels().outputs,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.terms.len()
    }

    pub(crate) fn max_lag(&self) -> usize {
        self.max_lag
    }

    /// Value of term `i` at sample `k >= max_lag`, with outputs read from
    /// `y` and noise from `xi`.
    #[inline]
    pub(crate) fn term(&self, i: usize, k: usize, u: &DMatrix<f64>, y: &DMatrix<f64>, xi: &DMatrix<f64>) -> f64 {
        let mut prod = 1.0;
        for f in &self.terms[i] {
            let src = match f.source {
                Source::U => u,
                Source::Y => y,
                Source::Xi => xi,
            };
            let row = k - f.delay;
            let mut v: f64 = f.channels.iter().map(|&c| src[(row, c)]).sum();
            if let Some(op) = f.wrap {
                v = op.apply(v);
            }
            prod *= v;
        }
        prod
    }

    fn terms_at(&self, k: usize, u: &DMatrix<f64>, y: &DMatrix<f64>, xi: &DMatrix<f64>, out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.term(i, k, u, y, xi);
        }
    }

    /// One-step-ahead prediction. Rows before `max_lag` carry the measured
    /// outputs; noise regressors are the sequential prediction residuals.
    pub(crate) fn predict(&self, theta: &DMatrix<f64>, d: &DataSet) -> DMatrix<f64> {
        let n = d.len();
        let mut yp = d.y().clone();
        let mut resid = DMatrix::zeros(n, self.outputs);
        let mut t = vec![0.0; self.len()];
        for k in self.max_lag..n {
            self.terms_at(k, d.u(), d.y(), &resid, &mut t);
            for j in 0..self.outputs {
                let v: f64 = t.iter().enumerate().map(|(i, ti)| theta[(i, j)] * ti).sum();
                yp[(k, j)] = v;
                resid[(k, j)] = d.y()[(k, j)] - v;
            }
        }
        yp
    }

    /// Free-run simulation with noise regressors at zero. On divergence the
    /// remaining rows are NaN and the flag is set.
    pub(crate) fn simulate(&self, theta: &DMatrix<f64>, d: &DataSet) -> (DMatrix<f64>, bool) {
        let n = d.len();
        let mut ys = d.y().clone();
        let noise = DMatrix::zeros(n, self.outputs);
        let bound = divergence_bound(d.y());
        let mut t = vec![0.0; self.len()];
        for k in self.max_lag..n {
            self.terms_at(k, d.u(), &ys, &noise, &mut t);
            for j in 0..self.outputs {
                let v: f64 = t.iter().enumerate().map(|(i, ti)| theta[(i, j)] * ti).sum();
                if !v.is_finite() || v.abs() > bound {
                    ys.rows_mut(k, n - k).fill(f64::NAN);
                    return (ys, true);
                }
                ys[(k, j)] = v;
            }
        }
        (ys, false)
    }

    /// Regressor matrix over rows `max_lag..N`, noise columns read from `xi`.
    pub(crate) fn regressors(&self, d: &DataSet, xi: &DMatrix<f64>) -> DMatrix<f64> {
        let rows = d.len().saturating_sub(self.max_lag);
        DMatrix::from_fn(rows, self.len(), |r, i| {
            self.term(i, r + self.max_lag, d.u(), d.y(), xi)
        })
    }
}

/// `10⁶ · (1 + max|y|)`.
pub(crate) fn divergence_bound(y: &DMatrix<f64>) -> f64 {
    1e6 * (1.0 + y.amax())
}
