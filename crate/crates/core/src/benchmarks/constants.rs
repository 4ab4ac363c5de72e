//! Physical parameters of the simulated benchmark systems.
//!
//! Changing any value here changes generated data; bump
//! [`CONSTANTS_VERSION`] with it so sidecar metadata stays traceable.

pub const CONSTANTS_VERSION: u32 = 1;

/// Bouc-Wen hysteretic oscillator, values of the nonlinear system
/// identification benchmark by J.P. Noël and M. Schoukens,
/// "Hysteretic benchmark with a dynamic nonlinearity" (Workshop on
/// Nonlinear System Identification Benchmarks, 2016):
///
/// ```text
/// m ÿ + c ẏ + k y + z = u
/// ż = α ẏ − β (γ |ẏ| |z|^(ν−1) z + δ ẏ |z|^ν)
/// ```
pub mod bouc_wen {
    /// Mass, kg.
    pub const MASS: f64 = 2.0;
    /// Linear damping, N·s/m.
    pub const DAMPING: f64 = 10.0;
    /// Linear stiffness, N/m.
    pub const STIFFNESS: f64 = 5e4;
    /// Hysteresis stiffness α, N/m.
    pub const ALPHA: f64 = 5e4;
    /// Hysteresis scale β, N/m.
    pub const BETA: f64 = 1e3;
    pub const GAMMA: f64 = 0.8;
    pub const DELTA: f64 = -1.1;
    pub const NU: f64 = 1.0;
    /// Output sample rate, Hz.
    pub const SAMPLE_RATE: f64 = 750.0;
    /// Multisine excitation band, Hz.
    pub const BAND: (f64, f64) = (5.0, 150.0);
    /// Multisine RMS force, N.
    pub const INPUT_RMS: f64 = 50.0;
}

/// Continuous stirred tank reactor with an exothermic first-order reaction
/// and a cooling jacket, parameterized after Morningred, Paden, Seborg and
/// Mellichamp, "An adaptive nonlinear predictive controller" (Chemical
/// Engineering Science 47, 1992):
///
/// ```text
/// Ċ₂ = Q₁/V (C₁ − C₂) − k₀ C₂ e^(−E/RT₂)
/// Ṫ₂ = Q₁/V (T₁ − T₂) + K_r C₂ e^(−E/RT₂) + Q_c/V (1 − e^(−K_h/Q_c)) (T_c − T₂)
/// ```
///
/// Time in minutes, volumes in litres, temperatures in kelvin,
/// concentrations in mol/m³.
pub mod cstr {
    /// Reactor volume V, L.
    pub const VOLUME: f64 = 100.0;
    /// Nominal feed flow Q₁, L/min.
    pub const FEED_FLOW: f64 = 100.0;
    /// Nominal coolant inlet temperature T_c, K.
    pub const COOLANT_TEMP: f64 = 350.0;
    /// Nominal feed concentration C₁, mol/m³ (1 mol/L).
    pub const FEED_CONC: f64 = 1000.0;
    /// Feed temperature T₁, K.
    pub const FEED_TEMP: f64 = 350.0;
    /// Coolant flow Q_c, L/min.
    pub const COOLANT_FLOW: f64 = 103.41;
    /// Pre-exponential factor k₀, 1/min.
    pub const RATE_CONSTANT: f64 = 7.2e10;
    /// Activation temperature E/R, K.
    pub const ACTIVATION_TEMP: f64 = 1e4;
    /// Heat of reaction over volumetric heat capacity, −ΔH/(ρ c_p):
    /// 2·10⁵ cal/mol / (1000 g/L · 1 cal/(g·K)), in K·m³/mol.
    pub const REACTION_HEAT: f64 = 2e5 / 1000.0 / 1000.0;
    /// Jacket conductance over coolant heat capacity, hA/(ρ_c c_pc):
    /// 7·10⁵ cal/(min·K) / 1000 cal/(L·K), in L/min.
    pub const JACKET_CONDUCTANCE: f64 = 7e5 / 1000.0;
    /// Sample time, min.
    pub const SAMPLE_TIME: f64 = 0.01;
    /// PRBS clock period in samples: 0.1 min, a tenth of the nominal
    /// residence time V/Q₁.
    pub const PRBS_CLOCK: usize = 10;
    /// PRBS register length (maximum-length sequence of period 127).
    pub const PRBS_BITS: u32 = 7;
    /// Relative PRBS amplitude on Q₁ and T_c.
    pub const PRBS_SWING: f64 = 0.1;
    /// C₁ operating points: equidistant in this range relative to nominal.
    pub const FEED_CONC_RANGE: (f64, f64) = (0.5, 1.5);
    pub const FEED_CONC_POINTS: usize = 10;
    /// Uniform output noise half-widths for T₂ (K) and C₂ (mol/m³).
    pub const NOISE_AMPLITUDE: [f64; 2] = [0.5, 2.0];
}
