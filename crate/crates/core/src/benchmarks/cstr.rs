//! Stirred tank reactor: outputs `[T₂, C₂]`, inputs `[Q₁, T_c, C₁]`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use super::constants::cstr::*;
use super::constants::CONSTANTS_VERSION;
use super::inputs::maximum_length_sequence;
use super::ode::advance;
use super::{snr_db, BenchmarkError, Generated, Metadata};
use crate::rng;
use crate::simulation::DataSet;

/// Reactor temperatures outside this range, in kelvin, are rejected.
const TEMPERATURE_RANGE: (f64, f64) = (273.15, 700.0);

/// Excitation and measurement settings.
#[derive(Clone, Debug, PartialEq)]
pub struct CstrProtocol {
    /// Minutes.
    pub sample_time: f64,
    /// Samples per PRBS bit.
    pub prbs_clock: usize,
    pub prbs_bits: u32,
    /// Relative PRBS amplitude on Q₁ and T_c.
    pub swing: f64,
    /// Number of C₁ operating points visited.
    pub feed_points: usize,
    /// Uniform noise half-widths on T₂ and C₂.
    pub noise: [f64; 2],
    /// RK4 steps per sample interval.
    pub substeps: usize,
}

impl Default for CstrProtocol {
    fn default() -> Self {
        CstrProtocol {
            sample_time: SAMPLE_TIME,
            prbs_clock: PRBS_CLOCK,
            prbs_bits: PRBS_BITS,
            swing: PRBS_SWING,
            feed_points: FEED_CONC_POINTS,
            noise: NOISE_AMPLITUDE,
            substeps: 10,
        }
    }
}

/// Time derivative of `[T₂, C₂]` at inputs `[Q₁, T_c, C₁]`.
pub fn cstr_derivative(x: &[f64; 2], u: &[f64; 3]) -> [f64; 2] {
    let [t, c] = *x;
    let [q, tc, cin] = *u;
    let rate = RATE_CONSTANT * c * (-ACTIVATION_TEMP / t).exp();
    let jacket = COOLANT_FLOW / VOLUME * (1.0 - (-JACKET_CONDUCTANCE / COOLANT_FLOW).exp());
    [
        q / VOLUME * (FEED_TEMP - t) + REACTION_HEAT * rate + jacket * (tc - t),
        q / VOLUME * (cin - c) - rate,
    ]
}

/// Hottest steady state at constant inputs. At nominal inputs this is the
/// ignited, high-conversion operating point; a cold start settles on the
/// extinguished one instead.
pub fn cstr_equilibrium(u: &[f64; 3]) -> [f64; 2] {
    let [q, _, cin] = *u;
    // the concentration balance gives C₂ as a function of T₂
    let conc = |t: f64| q * cin / (q + VOLUME * RATE_CONSTANT * (-ACTIVATION_TEMP / t).exp());
    let heat = |t: f64| cstr_derivative(&[t, conc(t)], u)[0];
    let mut hi = TEMPERATURE_RANGE.1;
    let mut lo = hi;
    while lo > TEMPERATURE_RANGE.0 {
        lo = hi - 0.5;
        if heat(lo) > 0.0 {
            break;
        }
        hi = lo;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if heat(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    [t, conc(t)]
}

/// Q₁ and T_c follow independent maximum-length sequences of ±`swing`
/// around nominal; C₁ ramps from nominal to each of `feed_points`
/// equidistant levels in 50%–150% of nominal, in random order, one level
/// per `n / feed_points` samples. The reactor starts at its nominal steady
/// state and outputs are sampled before each input update.
pub fn generate_cstr(n: usize, p: &CstrProtocol, seed: u64) -> Result<Generated, BenchmarkError> {
    if n == 0 || p.substeps == 0 || p.feed_points == 0 {
        return Err(BenchmarkError::Input("need samples, integration steps and feed points".into()));
    }
    if !(p.sample_time > 0.0 && p.swing >= 0.0 && p.swing < 1.0) || p.noise.iter().any(|a| a.is_nan() || *a < 0.0) {
        return Err(BenchmarkError::Input(format!("bad reactor protocol {p:?}")));
    }
    let mut r = rng::substream(seed, &[1]);
    let period = 1u32 << p.prbs_bits;
    let first = r.random_range(1..period);
    let mut second = r.random_range(1..period);
    while second == first {
        second = r.random_range(1..period);
    }
    let q = maximum_length_sequence(p.prbs_bits, first, p.prbs_clock, n)?;
    let tc = maximum_length_sequence(p.prbs_bits, second, p.prbs_clock, n)?;

    let (lo, hi) = FEED_CONC_RANGE;
    let mut levels: Vec<f64> = (0..p.feed_points)
        .map(|i| {
            let s = if p.feed_points == 1 { 0.5 } else { i as f64 / (p.feed_points - 1) as f64 };
            FEED_CONC * (lo + (hi - lo) * s)
        })
        .collect();
    levels.shuffle(&mut r);
    let segment = n.div_ceil(p.feed_points);
    let feed: Vec<f64> = (0..n)
        .map(|k| {
            let i = k / segment;
            let from = if i == 0 { FEED_CONC } else { levels[i - 1] };
            let frac = (k % segment + 1) as f64 / segment as f64;
            from + (levels[i] - from) * frac
        })
        .collect();

    let mut u = DMatrix::zeros(n, 3);
    for k in 0..n {
        u[(k, 0)] = FEED_FLOW * (1.0 + p.swing * q[k]);
        u[(k, 1)] = COOLANT_TEMP * (1.0 + p.swing * tc[k]);
        u[(k, 2)] = feed[k];
    }

    let mut x = cstr_equilibrium(&[FEED_FLOW, COOLANT_TEMP, FEED_CONC]);
    let mut clean = DMatrix::zeros(n, 2);
    for k in 0..n {
        clean[(k, 0)] = x[0];
        clean[(k, 1)] = x[1];
        let uk = [u[(k, 0)], u[(k, 1)], u[(k, 2)]];
        x = advance(&|s: &[f64; 2]| cstr_derivative(s, &uk), &x, p.sample_time, p.substeps);
        check_range(x, k + 1)?;
    }

    let mut y = clean.clone();
    for (j, &a) in p.noise.iter().enumerate() {
        if a > 0.0 {
            let mut r = rng::substream(seed, &[2, j as u64]);
            for k in 0..n {
                y[(k, j)] += r.random_range(-a..=a);
            }
        }
    }
    let meta = Metadata {
        system: "cstr".into(),
        seed,
        n,
        sample_time: p.sample_time,
        constants_version: CONSTANTS_VERSION,
        inputs: vec!["Q1 [L/min]".into(), "Tc [K]".into(), "C1 [mol/m3]".into()],
        outputs: vec!["T2 [K]".into(), "C2 [mol/m3]".into()],
        equations: vec![
            format!(
                "T2' = Q1/{VOLUME}*({FEED_TEMP} - T2) + {REACTION_HEAT}*{RATE_CONSTANT}*C2*exp(-{ACTIVATION_TEMP}/T2) \
                 + {COOLANT_FLOW}/{VOLUME}*(1 - exp(-{JACKET_CONDUCTANCE}/{COOLANT_FLOW}))*(Tc - T2)"
            ),
            format!("C2' = Q1/{VOLUME}*(C1 - C2) - {RATE_CONSTANT}*C2*exp(-{ACTIVATION_TEMP}/T2)"),
        ],
        model: None,
        input_spec: None,
        noise: format!("uniform, half-widths {:?}", p.noise),
        snr_db: if p.noise.iter().any(|a| *a > 0.0) { snr_db(&clean, &y) } else { Vec::new() },
    };
    Ok(Generated {
        data: DataSet::new("cstr", u, y)?,
        clean,
        meta,
    })
}

fn check_range(x: [f64; 2], sample: usize) -> Result<(), BenchmarkError> {
    let [t, c] = x;
    if !(t >= TEMPERATURE_RANGE.0 && t <= TEMPERATURE_RANGE.1) {
        return Err(BenchmarkError::OutOfRange { what: "reactor temperature", sample, value: t });
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(BenchmarkError::OutOfRange { what: "reactor concentration", sample, value: c });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::rms_difference;

    const NOMINAL: [f64; 3] = [FEED_FLOW, COOLANT_TEMP, FEED_CONC];

    #[test]
    fn nominal_steady_state() {
        let x = cstr_equilibrium(&NOMINAL);
        let d = cstr_derivative(&x, &NOMINAL);
        assert!(d[0].abs() < 1e-8 && d[1].abs() < 1e-8, "{d:?}");
        // high-conversion operating point of the reference design
        assert!((x[0] - 438.54).abs() < 0.01, "{x:?}");
        assert!((x[1] - 100.0).abs() < 0.1, "{x:?}");
    }

    #[test]
    fn cold_start_extinguishes() {
        let mut x = [FEED_TEMP, 0.0];
        for _ in 0..100 {
            x = advance(&|s: &[f64; 2]| cstr_derivative(s, &NOMINAL), &x, 1.0, 1000);
        }
        assert!(x[0] < 360.0 && x[1] > 900.0, "{x:?}");
    }

    #[test]
    fn constant_nominal_inputs_stay_put() {
        // a single feed point sits at 100% of nominal
        let p = CstrProtocol { swing: 0.0, feed_points: 1, noise: [0.0; 2], ..Default::default() };
        let g = generate_cstr(300, &p, 0).unwrap();
        let x0 = cstr_equilibrium(&NOMINAL);
        for k in 0..300 {
            assert!((g.clean[(k, 0)] - x0[0]).abs() < 1e-6);
            assert!((g.clean[(k, 1)] - x0[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn protocol_shapes_inputs() {
        let g = generate_cstr(1000, &CstrProtocol::default(), 4).unwrap();
        let u = g.data.u();
        for k in 0..1000 {
            assert!([90.0, 110.0].iter().any(|v| (u[(k, 0)] - v).abs() < 1e-9));
            assert!([315.0, 385.0].iter().any(|v| (u[(k, 1)] - v).abs() < 1e-9));
            assert!((500.0 - 1e-9..=1500.0 + 1e-9).contains(&u[(k, 2)]));
        }
        assert_ne!(u.column(0), u.column(1).map(|v| v / 3.5));
        let mut ends: Vec<f64> = (1..=10).map(|i| u[(100 * i - 1, 2)]).collect();
        ends.sort_by(f64::total_cmp);
        for (i, v) in ends.iter().enumerate() {
            assert!((v - (500.0 + 1000.0 * i as f64 / 9.0)).abs() < 1e-9);
        }
        // bounded noise
        for (j, &a) in NOISE_AMPLITUDE.iter().enumerate() {
            assert!(g.data.y().column(j).iter().zip(g.clean.column(j).iter()).all(|(y, c)| (y - c).abs() <= a));
        }
    }

    #[test]
    fn seeded_output_repeats() {
        let p = CstrProtocol::default();
        let a = generate_cstr(400, &p, 8).unwrap();
        assert_eq!(a.data, generate_cstr(400, &p, 8).unwrap().data);
        assert_ne!(a.data, generate_cstr(400, &p, 9).unwrap().data);
    }

    #[test]
    fn halving_the_step_converges() {
        let p = CstrProtocol::default();
        let fine = CstrProtocol { substeps: 20, ..p.clone() };
        for seed in 0..3 {
            let a = generate_cstr(1000, &p, seed).unwrap();
            let b = generate_cstr(1000, &fine, seed).unwrap();
            let d = rms_difference(&a.clean, &b.clean);
            assert!(d < 1e-6, "seed {seed}: {d}");
        }
    }

    #[test]
    fn runaway_is_rejected() {
        let p = CstrProtocol { swing: 0.6, sample_time: 0.05, ..Default::default() };
        let err = (0..5).find_map(|s| generate_cstr(1000, &p, s).err());
        assert!(matches!(err, Some(BenchmarkError::OutOfRange { .. })), "{err:?}");
    }
}
