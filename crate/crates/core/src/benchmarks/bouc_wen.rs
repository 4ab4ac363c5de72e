//! Bouc-Wen hysteretic oscillator driven by a force input.

use nalgebra::DMatrix;

use super::constants::bouc_wen::*;
use super::constants::CONSTANTS_VERSION;
use super::ode::advance;
use super::{BenchmarkError, Generated, InputSpec, Metadata};
use crate::rng;
use crate::simulation::DataSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoucWenOptions {
    /// RK4 steps per sample interval.
    pub substeps: usize,
}

impl Default for BoucWenOptions {
    fn default() -> Self {
        BoucWenOptions { substeps: 10 }
    }
}

impl InputSpec {
    /// Random-phase multisine over the benchmark band at its RMS force.
    pub fn bouc_wen_default() -> Self {
        InputSpec::Multisine {
            band: (BAND.0 / SAMPLE_RATE, BAND.1 / SAMPLE_RATE),
            rms: INPUT_RMS,
        }
    }
}

/// State derivative for `[displacement, velocity, hysteretic force]`.
fn derivative(x: &[f64; 3], force: f64) -> [f64; 3] {
    let [_, v, z] = *x;
    let accel = (force - DAMPING * v - STIFFNESS * x[0] - z) / MASS;
    let za = z.abs();
    let dz = ALPHA * v - BETA * (GAMMA * v.abs() * za.powf(NU - 1.0) * z + DELTA * v * za.powf(NU));
    [v, accel, dz]
}

pub fn generate_bouc_wen(n: usize, input: &InputSpec, seed: u64) -> Result<Generated, BenchmarkError> {
    generate_bouc_wen_with(n, input, seed, BoucWenOptions::default())
}

/// Displacement response from rest to a force held constant over each
/// sample interval.
pub fn generate_bouc_wen_with(
    n: usize,
    input: &InputSpec,
    seed: u64,
    opts: BoucWenOptions,
) -> Result<Generated, BenchmarkError> {
    if n == 0 || opts.substeps == 0 {
        return Err(BenchmarkError::Input("need at least one sample and one integration step".into()));
    }
    let u = input.generate(n, &mut rng::substream(seed, &[1, 0]))?;
    let ts = 1.0 / SAMPLE_RATE;
    let mut x = [0.0; 3];
    let mut y = Vec::with_capacity(n);
    for (k, &force) in u.iter().enumerate() {
        y.push(x[0]);
        x = advance(&|s: &[f64; 3]| derivative(s, force), &x, ts, opts.substeps);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(BenchmarkError::OutOfRange { what: "displacement", sample: k + 1, value: x[0] });
        }
    }
    let clean = DMatrix::from_column_slice(n, 1, &y);
    let meta = Metadata {
        system: "boucwen".into(),
        seed,
        n,
        sample_time: ts,
        constants_version: CONSTANTS_VERSION,
        inputs: vec!["force [N]".into()],
        outputs: vec!["displacement [m]".into()],
        equations: vec![
            format!("{MASS}*y'' + {DAMPING}*y' + {STIFFNESS}*y + z = u"),
            format!("z' = {ALPHA}*y' - {BETA}*({GAMMA}*|y'|*|z|^({NU}-1)*z + {DELTA}*y'*|z|^{NU})"),
        ],
        model: None,
        input_spec: Some(input.clone()),
        noise: "none".into(),
        snr_db: Vec::new(),
    };
    Ok(Generated {
        data: DataSet::new("boucwen", DMatrix::from_column_slice(n, 1, &u), clean.clone())?,
        clean,
        meta,
    })
}
