//! Covariance matrix adaptation evolution strategy, `(μ/μ_w, λ)` variant
//! with rank-one and rank-μ updates and cumulative step-size adaptation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct CmaesOptions {
    /// Offspring per generation; `None` gives `4 + ⌊3 ln n⌋`.
    pub population: Option<usize>,
    pub max_evals: usize,
    pub sigma0: f64,
}

#[derive(Clone, Debug)]
pub struct CmaesResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    /// Best-so-far objective after each generation.
    pub history: Vec<f64>,
}

pub fn default_population(n: usize) -> usize {
    4 + (3.0 * (n.max(1) as f64).ln()).floor() as usize
}

fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` starting at `x0`. Candidates of one generation are drawn
/// before any of them is evaluated, so parallel evaluation cannot change
/// the result.
pub fn minimize<F, R>(f: F, x0: &[f64], opts: &CmaesOptions, rng: &mut R) -> CmaesResult
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    let n = x0.len();
    let mut best_x = x0.to_vec();
    let mut best_f = key(f(x0));
    let mut evals = 1;
    let mut history = Vec::new();
    if n == 0 {
        return CmaesResult { x: best_x, f: best_f, evals, history };
    }

    let nf = n as f64;
    let lambda = opts.population.unwrap_or_else(|| default_population(n)).max(2);
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu).map(|i| ((mu as f64) + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let wsum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / wsum).collect();
    let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
    let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = opts.sigma0;
    let mut pc = DVector::zeros(n);
    let mut ps = DVector::zeros(n);
    let mut b = DMatrix::identity(n, n);
    let mut d = DVector::from_element(n, 1.0);
    let mut c = DMatrix::identity(n, n);
    let mut gen = 0usize;

    while evals + lambda <= opts.max_evals {
        gen += 1;
        let zs: Vec<DVector<f64>> = (0..lambda)
            .map(|_| DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let ys: Vec<DVector<f64>> = zs.iter().map(|z| &b * d.component_mul(z)).collect();
        let xs: Vec<DVector<f64>> = ys.iter().map(|y| &mean + y * sigma).collect();
        let fs: Vec<f64> = xs.par_iter().map(|x| key(f(x.as_slice()))).collect();
        evals += lambda;

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&i, &j| fs[i].total_cmp(&fs[j]));
        if fs[order[0]] < best_f {
            best_f = fs[order[0]];
            best_x = xs[order[0]].as_slice().to_vec();
        }
        history.push(best_f);

        let old_mean = mean.clone();
        let mut y_w = DVector::zeros(n);
        for (w, &i) in weights.iter().zip(&order) {
            y_w += &ys[i] * *w;
        }
        mean = &old_mean + &y_w * sigma;

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let inv_sqrt_y = &b * (b.transpose() * &y_w).component_div(&d);
        ps = &ps * (1.0 - cs) + inv_sqrt_y * (cs * (2.0 - cs) * mueff).sqrt();
        let ps_norm = ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - cs).powi(2 * gen as i32)).sqrt() / chi_n < 1.4 + 2.0 / (nf + 1.0);
        let hs = if hsig { 1.0 } else { 0.0 };
        pc = &pc * (1.0 - cc) + &y_w * (hs * (cc * (2.0 - cc) * mueff).sqrt());

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, &i) in weights.iter().zip(&order) {
            rank_mu += &ys[i] * ys[i].transpose() * *w;
        }
        let delta_h = (1.0 - hs) * cc * (2.0 - cc);
        c = &c * (1.0 - c1 - cmu) + (&pc * pc.transpose() + &c * delta_h) * c1 + rank_mu * cmu;
        c = (&c + c.transpose()) * 0.5;

        sigma *= ((cs / damps) * (ps_norm / chi_n - 1.0)).exp();

        let eig = SymmetricEigen::new(c.clone());
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            break;
        }
        b = eig.eigenvectors;
        d = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());

        let scale = sigma * d.amax();
        if !scale.is_finite() || scale < 1e-14 * (1.0 + mean.amax()) {
            break;
        }
    }
    CmaesResult { x: best_x, f: best_f, evals, history }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum()
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }

    fn opts(max_evals: usize) -> CmaesOptions {
        CmaesOptions { population: None, max_evals, sigma0: 0.5 }
    }

    #[test]
    fn solves_shifted_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = minimize(sphere, &[5.0; 4], &opts(6000), &mut rng);
        assert!(r.f < 1e-12, "{}", r.f);
    }

    #[test]
    fn solves_rosenbrock() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = minimize(rosenbrock, &[-1.0, 1.0, -0.5], &opts(20000), &mut rng);
        assert!(r.f < 1e-8, "{}", r.f);
    }

    #[test]
    fn best_so_far_is_monotone_and_budget_held() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = minimize(rosenbrock, &[0.0; 5], &opts(500), &mut rng);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.evals <= 500);
        assert_eq!(r.f, *r.history.last().unwrap());
    }

    #[test]
    fn deterministic_given_seed() {
        let run = || minimize(rosenbrock, &[0.0; 3], &opts(800), &mut ChaCha8Rng::seed_from_u64(8)).x;
        assert_eq!(run(), run());
    }

    #[test]
    fn survives_infinite_and_nan_values() {
        let f = |x: &[f64]| if x[0] > 1.0 { f64::INFINITY } else if x[0] < -3.0 { f64::NAN } else { (x[0] + 1.0).powi(2) };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = minimize(f, &[0.5], &opts(2000), &mut rng);
        assert!((r.x[0] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn default_population_formula() {
        assert_eq!(default_population(1), 4);
        assert_eq!(default_population(10), 10);
        assert_eq!(default_population(3), 7);
    }
}
