//! Excitation signals. Frequencies are in cycles per sample.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BenchmarkError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    /// Random multilevel steps: every `hold` samples one of `levels`
    /// equally spaced values in `[-amplitude, amplitude]`.
    Prbs { levels: usize, hold: usize, amplitude: f64 },
    /// Random-phase multisine, periodic in the record length, with flat
    /// amplitude spectrum over `band` and the given RMS value.
    Multisine { band: (f64, f64), rms: f64 },
    /// Linear chirp sweeping `band` over the record.
    Sweep { band: (f64, f64), amplitude: f64 },
}

impl InputSpec {
    pub fn validate(&self) -> Result<(), BenchmarkError> {
        let bad = |m: String| Err(BenchmarkError::Input(m));
        match *self {
            InputSpec::Prbs { levels, hold, amplitude } => {
                if levels < 2 || hold < 1 || !(amplitude.is_finite() && amplitude >= 0.0) {
                    return bad(format!("prbs needs levels ≥ 2, hold ≥ 1 and a finite amplitude, got {levels}, {hold}, {amplitude}"));
                }
            }
            InputSpec::Multisine { band, rms: level } => {
                check_band(band)?;
                if !(level.is_finite() && level >= 0.0) {
                    return bad(format!("multisine rms {level}"));
                }
            }
            InputSpec::Sweep { band, amplitude } => {
                check_band(band)?;
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return bad(format!("sweep amplitude {amplitude}"));
                }
            }
        }
        Ok(())
    }

    /// One channel of `n` samples.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>, BenchmarkError> {
        self.validate()?;
        Ok(match *self {
            InputSpec::Prbs { levels, hold, amplitude } => {
                let step = 2.0 * amplitude / (levels - 1) as f64;
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let v = -amplitude + step * rng.random_range(0..levels) as f64;
                    let len = hold.min(n - out.len());
                    out.extend(std::iter::repeat_n(v, len));
                }
                out
            }
            InputSpec::Multisine { band, rms } => multisine(n, band, rms, rng)?,
            InputSpec::Sweep { band: (lo, hi), amplitude } => (0..n)
                .map(|k| {
                    let t = k as f64;
                    amplitude * (2.0 * PI * (lo * t + (hi - lo) * t * t / (2.0 * n as f64))).sin()
                })
                .collect(),
        })
    }
}

fn check_band((lo, hi): (f64, f64)) -> Result<(), BenchmarkError> {
    if lo >= 0.0 && lo <= hi && hi <= 0.5 {
        Ok(())
    } else {
        Err(BenchmarkError::Input(format!("band ({lo}, {hi}) must satisfy 0 ≤ low ≤ high ≤ 0.5")))
    }
}

fn multisine<R: Rng + ?Sized>(n: usize, (lo, hi): (f64, f64), level: f64, rng: &mut R) -> Result<Vec<f64>, BenchmarkError> {
    let len = n as f64;
    let first = ((lo * len).ceil() as usize).max(1);
    let last = ((hi * len).floor() as usize).min(n.saturating_sub(1) / 2);
    if first > last {
        return Err(BenchmarkError::Input(format!(
            "no frequency line of a {n}-sample record falls in ({lo}, {hi})"
        )));
    }
    let lines: Vec<(f64, f64)> = (first..=last)
        .map(|k| (2.0 * PI * k as f64 / len, rng.random_range(0.0..2.0 * PI)))
        .collect();
    let mut out: Vec<f64> = (0..n)
        .map(|t| lines.iter().map(|(w, phase)| (w * t as f64 + phase).cos()).sum())
        .collect();
    // each line contributes 1/2 to the mean square over a full period
    let scale = level / (lines.len() as f64 / 2.0).sqrt();
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// ±1 maximum-length sequence of a Fibonacci shift register of `bits`
/// stages, each bit held for `clock` samples. `state` must be nonzero in
/// its low `bits` bits.
pub fn maximum_length_sequence(bits: u32, state: u32, clock: usize, n: usize) -> Result<Vec<f64>, BenchmarkError> {
    let taps = match bits {
        3 => [3, 2],
        4 => [4, 3],
        5 => [5, 3],
        6 => [6, 5],
        7 => [7, 6],
        9 => [9, 5],
        10 => [10, 7],
        11 => [11, 9],
        _ => return Err(BenchmarkError::Input(format!("no tap table for a {bits}-bit register"))),
    };
    let mask = (1u32 << bits) - 1;
    let mut reg = state & mask;
    if reg == 0 || clock == 0 {
        return Err(BenchmarkError::Input("register state and clock must be nonzero".into()));
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let bit = ((reg >> (taps[0] - 1)) ^ (reg >> (taps[1] - 1))) & 1;
        let v = if reg & 1 == 1 { 1.0 } else { -1.0 };
        reg = ((reg << 1) | bit) & mask;
        let len = clock.min(n - out.len());
        out.extend(std::iter::repeat_n(v, len));
    }
    Ok(out)
}
