//! Benchmarks for the numeric kernels and the main pipelines.

use combdrive::continuation::shoot_odd;
use combdrive::hill::orbit_monodromy;
use combdrive::orbits::odd_orbit;
use combdrive::period::{level_for_period, period, period_derivative, period_inverse};
use combdrive::ModelParams;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_period(c: &mut Criterion) {
    let p = ModelParams::default_config();
    c.bench_function("period at hbar*/2", |b| {
        b.iter(|| period(black_box(p.h_star / 2.0), &p).unwrap())
    });
    c.bench_function("period_derivative at hbar*/2", |b| {
        b.iter(|| period_derivative(black_box(p.h_star / 2.0), &p).unwrap())
    });
    c.bench_function("period_inverse T=4pi", |b| {
        b.iter(|| period_inverse(black_box(4.0 * std::f64::consts::PI), &p).unwrap())
    });
    c.bench_function("level_for_period T=16pi (deep, dd refine)", |b| {
        b.iter(|| level_for_period(black_box(16.0 * std::f64::consts::PI), &p).unwrap())
    });
}

fn bench_monodromy(c: &mut Criterion) {
    let p = ModelParams::default_config();
    let moderate = odd_orbit(2, 1, &p).unwrap();
    let deep = odd_orbit(5, 1, &p).unwrap();
    c.bench_function("monodromy (2,1) f64", |b| {
        b.iter(|| orbit_monodromy(black_box(&moderate), &p).unwrap())
    });
    c.bench_function("monodromy (5,1) double-double", |b| {
        b.iter(|| orbit_monodromy(black_box(&deep), &p).unwrap())
    });
}

fn bench_shooting(c: &mut Criterion) {
    let p = ModelParams::default_config();
    let seed = odd_orbit(2, 1, &p).unwrap().init;
    c.bench_function("shoot (2,1) odd delta=1e-4", |b| {
        b.iter(|| shoot_odd(2, 1, black_box(1e-4), seed, &p).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_period, bench_monodromy, bench_shooting
}
criterion_main!(benches);
