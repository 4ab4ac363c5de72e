//! Polynomial systems with known coefficients.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

use super::{snr_db, BenchmarkError, Generated, InputSpec, Metadata};
use crate::grammar::{ChannelCounts, Source};
use crate::interpreter::{MonomialTerm, PolynomialModel, SignalFactor};
use crate::rng;
use crate::simulation::{simulate, DataSet};

const INPUT_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedSystem {
    /// True model; must carry coefficients.
    pub model: PolynomialModel,
    /// Standard deviation of Gaussian noise added to each output.
    pub noise_std: Vec<f64>,
    /// Excitation applied independently to every input channel.
    pub input: InputSpec,
}

impl Default for PlantedSystem {
    /// `y(k) = 0.5 y(k-1) + 0.3 u(k-1) + 0.1 u(k-1)²` under a white
    /// nine-level input on [-1, 1], noise-free.
    fn default() -> Self {
        let u1 = || SignalFactor::channel(Source::U, 1, 1, 1);
        let y1 = SignalFactor::channel(Source::Y, 1, 1, 1);
        let model = with_coefficients(
            ChannelCounts::siso(),
            vec![
                (MonomialTerm::new(vec![y1]), vec![0.5]),
                (MonomialTerm::new(vec![u1()]), vec![0.3]),
                (MonomialTerm::new(vec![u1(), u1()]), vec![0.1]),
            ],
        );
        PlantedSystem {
            model,
            noise_std: vec![0.0],
            input: InputSpec::Prbs { levels: 9, hold: 1, amplitude: 1.0 },
        }
    }
}

/// Builds a model from terms given in any order, each with one coefficient
/// per output.
pub(crate) fn with_coefficients(channels: ChannelCounts, terms: Vec<(MonomialTerm, Vec<f64>)>) -> PolynomialModel {
    let model = PolynomialModel::new(terms.iter().map(|(t, _)| t.clone()).collect(), channels);
    let mut theta = DMatrix::zeros(model.len(), channels.outputs);
    for (t, c) in &terms {
        let i = model.terms().iter().position(|m| m == t).expect("term present");
        for (j, v) in c.iter().enumerate() {
            theta[(i, j)] += v;
        }
    }
    model.with_theta(theta).expect("shape matches")
}

/// Excites `sys` with a fresh input and records its free-run response
/// from rest plus output noise.
pub fn generate_planted(sys: &PlantedSystem, n: usize, seed: u64) -> Result<Generated, BenchmarkError> {
    let c = sys.model.channels();
    if sys.model.theta().is_none() {
        return Err(BenchmarkError::Input("planted model has no coefficients".into()));
    }
    if sys.noise_std.len() != c.outputs || sys.noise_std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(BenchmarkError::Input(format!(
            "need {} finite nonnegative noise levels, got {:?}",
            c.outputs, sys.noise_std
        )));
    }
    let lag = sys.model.max_lag();
    if n <= lag {
        return Err(BenchmarkError::TooShort { lag, n });
    }
    let mut u = DMatrix::zeros(n, c.inputs);
    for j in 0..c.inputs {
        let col = sys.input.generate(n, &mut rng::substream(seed, &[INPUT_STREAM, j as u64]))?;
        u.set_column(j, &DMatrix::from_column_slice(n, 1, &col).column(0));
    }
    let rest = DataSet::new("planted", u.clone(), DMatrix::zeros(n, c.outputs))?;
    let (clean, diverged) = simulate(&sys.model, &rest)?;
    if diverged {
        return Err(BenchmarkError::Divergent);
    }
    let mut y = clean.clone();
    let noisy = sys.noise_std.iter().any(|s| *s > 0.0);
    for (j, &std) in sys.noise_std.iter().enumerate() {
        if std > 0.0 {
            let normal = Normal::new(0.0, std).expect("validated above");
            let mut r = rng::substream(seed, &[NOISE_STREAM, j as u64]);
            for k in 0..n {
                y[(k, j)] += normal.sample(&mut r);
            }
        }
    }
    let meta = Metadata {
        system: "planted".into(),
        seed,
        n,
        sample_time: 1.0,
        constants_version: super::constants::CONSTANTS_VERSION,
        inputs: (1..=c.inputs).map(|i| format!("u{i}")).collect(),
        outputs: (1..=c.outputs).map(|i| format!("y{i}")).collect(),
        equations: sys.model.equation_strings(),
        model: Some(sys.model.to_export()),
        input_spec: Some(sys.input.clone()),
        noise: format!("gaussian, std {:?}", sys.noise_std),
        snr_db: if noisy { snr_db(&clean, &y) } else { Vec::new() },
    };
    Ok(Generated {
        data: DataSet::new("planted", u, y)?,
        clean,
        meta,
    })
}
