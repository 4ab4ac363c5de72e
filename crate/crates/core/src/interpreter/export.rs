use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{InterpretError, MonomialTerm, PolynomialModel, SignalFactor};
use crate::grammar::{ChannelCounts, LinkingArray, NonlinearOp, Source};

/// JSON form of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub channels: ChannelCounts,
    pub terms: Vec<TermExport>,
    /// `p × r_y`, row per term; absent for unestimated models.
    pub theta: Option<Vec<Vec<f64>>>,
    pub equation_strings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermExport {
    pub factors: Vec<FactorExport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorExport {
    pub source: Source,
    pub channel_mask: Vec<u8>,
    pub delay: u32,
    pub wrap: Option<NonlinearOp>,
}

impl From<&PolynomialModel> for ModelExport {
    fn from(m: &PolynomialModel) -> Self {
        let terms = m
            .terms
            .iter()
            .map(|t| TermExport {
                factors: t
                    .factors
                    .iter()
                    .map(|f| FactorExport {
                        source: f.source,
                        channel_mask: f.link.bits().iter().map(|&b| b as u8).collect(),
                        delay: f.delay,
                        wrap: f.wrap,
                    })
                    .collect(),
            })
            .collect();
        let theta = m.theta.as_ref().map(|th| {
            (0..th.nrows())
                .map(|i| (0..th.ncols()).map(|j| th[(i, j)]).collect())
                .collect()
        });
        ModelExport {
            channels: m.channels,
            terms,
            theta,
            equation_strings: m.equation_strings(),
        }
    }
}

impl TryFrom<&ModelExport> for PolynomialModel {
    type Error = InterpretError;

    /// Rebuilds the model. Term order in the file must be canonical, since
    /// the rows of `theta` follow it.
    fn try_from(e: &ModelExport) -> Result<Self, Self::Error> {
        let mut terms = Vec::with_capacity(e.terms.len());
        for t in &e.terms {
            let mut factors = Vec::with_capacity(t.factors.len());
            for f in &t.factors {
                if f.channel_mask.iter().any(|&b| b > 1) {
                    return Err(InterpretError::Invalid("channel_mask must be 0/1".into()));
                }
                let link = LinkingArray::new(f.channel_mask.iter().map(|&b| b == 1).collect())
                    .map_err(|err| InterpretError::Invalid(err.to_string()))?;
                factors.push(SignalFactor {
                    source: f.source,
                    delay: f.delay,
                    link,
                    wrap: f.wrap,
                });
            }
            terms.push(MonomialTerm::new(factors));
        }
        let model = PolynomialModel {
            terms,
            theta: None,
            channels: e.channels,
        };
        model.check_structure()?;
        match &e.theta {
            None => Ok(model),
            Some(rows) => {
                let p = model.terms.len();
                let r = model.channels.outputs;
                if rows.len() != p || rows.iter().any(|row| row.len() != r) {
                    return Err(InterpretError::ThetaShape {
                        expected_rows: p,
                        expected_cols: r,
                        rows: rows.len(),
                        cols: rows.first().map_or(0, Vec::len),
                    });
                }
                let theta = DMatrix::from_fn(p, r, |i, j| rows[i][j]);
                model.with_theta(theta)
            }
        }
    }
}

impl PolynomialModel {
    pub fn to_export(&self) -> ModelExport {
        ModelExport::from(self)
    }

    pub fn from_export(e: &ModelExport) -> Result<Self, InterpretError> {
        PolynomialModel::try_from(e)
    }
}
