use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cy_core::chungyao::{deboor_remainder, interpolate, RemainderOptions};
use cy_core::divdiff::{default_exactness, divided_difference, PointTuple};
use cy_core::geometry::{random_family, RandomFamilyOptions};
use cy_core::{Function, HyperplaneFamily};

fn family(n: usize, d: usize) -> HyperplaneFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = RandomFamilyOptions {
        min_volume: 0.1,
        max_retries: 100_000,
        ..RandomFamilyOptions::default()
    };
    random_family(n, d, &mut rng, &opts).unwrap()
}

fn lattice_build(c: &mut Criterion) {
    for (n, d) in [(2, 5), (3, 6)] {
        let fam = family(n, d);
        c.bench_function(&format!("lattice N={n} d={d}"), |b| {
            b.iter(|| black_box(&fam).lattice().unwrap())
        });
    }
}

fn interpolation(c: &mut Criterion) {
    for (n, d) in [(2, 5), (3, 6)] {
        let lat = family(n, d).lattice().unwrap();
        let f = Function::exp_affine(vec![1.0; n], 0.0);
        c.bench_function(&format!("interpolate N={n} d={d}"), |b| {
            b.iter(|| interpolate(black_box(&lat), &f).unwrap())
        });
    }
}

fn divided_differences(c: &mut Criterion) {
    let f = Function::exp_affine(vec![0.6, -0.4], 0.1);
    for s in [2usize, 4] {
        let pts: Vec<Vec<f64>> = (0..=s).map(|i| vec![0.1 * i as f64, 0.05 * (i * i) as f64]).collect();
        let tuple = PointTuple::new(pts).unwrap();
        let dirs = vec![vec![0.6, 0.8]; s];
        c.bench_function(&format!("divided difference s={s}"), |b| {
            b.iter(|| divided_difference(&f, black_box(&tuple), &dirs, default_exactness(s)).unwrap())
        });
    }
}

fn remainder(c: &mut Criterion) {
    let lat = family(2, 4).lattice().unwrap();
    let f = Function::exp_affine(vec![1.0, 1.0], 0.0);
    let x = vec![0.2, -0.1];
    c.bench_function("remainder N=2 d=4", |b| {
        b.iter(|| deboor_remainder(&lat, &f, black_box(&x), RemainderOptions::for_order(3)).unwrap())
    });
}

criterion_group!(benches, lattice_build, interpolation, divided_differences, remainder);
criterion_main!(benches);
