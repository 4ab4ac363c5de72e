use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagsr::benchmarks::{generate_planted, PlantedSystem};
use tagsr::estimation::{least_squares, RegressionProblem};
use tagsr::evolution::{nondominated_sort, ObjectivePoint};
use tagsr::{build_grammar, estimate, interpret, simulate, ChannelCounts, EstimatorConfig, SubModel};

fn least_squares_fit(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rp = RegressionProblem {
        phi: DMatrix::from_fn(1000, 20, |_, _| rng.random_range(-1.0..1.0)),
        psi: DMatrix::from_fn(1000, 1, |_, _| rng.random_range(-1.0..1.0)),
        column_map: (0..20).collect(),
    };
    c.bench_function("least_squares 1000x20", |b| b.iter(|| least_squares(black_box(&rp), 1e-8).unwrap()));
}

fn derive_and_interpret(c: &mut Criterion) {
    let g = build_grammar(SubModel::Narmax, ChannelCounts::new(2, 2, 2), &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trees: Vec<_> = (0..64).map(|_| g.random_derivation(50, &mut rng)).collect();
    c.bench_function("derive+interpret 64 trees, complexity 50", |b| {
        b.iter(|| {
            for d in &trees {
                black_box(interpret(&g.derive(d)).unwrap());
            }
        })
    });
}

fn sort_fronts(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pts: Vec<ObjectivePoint> =
        (0..200).map(|_| ObjectivePoint::errors(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect();
    c.bench_function("nondominated_sort 200 points", |b| {
        b.iter_batched(|| pts.clone(), |p| nondominated_sort(&p), BatchSize::SmallInput)
    });
}

fn simulate_planted(c: &mut Criterion) {
    let sys = PlantedSystem::default();
    let data = generate_planted(&sys, 4096, 3).unwrap().data;
    let model = estimate(&sys.model.without_theta(), &data, &EstimatorConfig::default()).unwrap();
    c.bench_function("simulate planted 4096 samples", |b| b.iter(|| simulate(black_box(&model), &data).unwrap()));
}

criterion_group!(benches, least_squares_fit, derive_and_interpret, sort_fronts, simulate_planted);
criterion_main!(benches);
