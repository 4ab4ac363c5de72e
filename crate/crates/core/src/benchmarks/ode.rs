//! Fixed-step Runge-Kutta integration with inputs held between samples.

/// One classical fourth-order step of `ẋ = f(x)`.
pub fn rk4_step<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], x: &[f64; N], h: f64) -> [f64; N] {
    let shifted = |base: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] { std::array::from_fn(|i| base[i] + s * k[i]) };
    let k1 = f(x);
    let k2 = f(&shifted(x, &k1, h / 2.0));
    let k3 = f(&shifted(x, &k2, h / 2.0));
    let k4 = f(&shifted(x, &k3, h));
    std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Advances `x` over one sample interval `ts` in `substeps` equal steps.
pub fn advance<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    x: &[f64; N],
    ts: f64,
    substeps: usize,
) -> [f64; N] {
    let h = ts / substeps as f64;
    let mut x = *x;
    for _ in 0..substeps {
        x = rk4_step(f, &x, h);
    }
    x
}
