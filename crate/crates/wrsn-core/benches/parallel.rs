//! Parallel-vs-sequential comparisons for the data-parallel kernels:
//! coverage arrangement construction, random-restart search, and ant
//! colony iterations. "seq" pins a one-thread rayon pool; "par" uses the
//! default pool. Results are identical between the two by construction.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use wrsn_core::baselines::{acs_solve, random_solve, AcsParams};
use wrsn_core::envs::make_env;
use wrsn_core::geometry::build_subregions;
use wrsn_core::instances::{generate_instance, GenParams, Variant};

fn pools() -> (rayon::ThreadPool, rayon::ThreadPool) {
    let seq = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("single-thread pool");
    let par = rayon::ThreadPoolBuilder::new()
        .build()
        .expect("default pool");
    (seq, par)
}

fn bench_build_subregions(c: &mut Criterion) {
    let mut params = GenParams::defaults_for(Variant::P3KCoverage);
    params.alpha = 0.3;
    let instance = (0..200)
        .find_map(|seed| generate_instance(Variant::P3KCoverage, 48, &params, seed).ok())
        .expect("coverable deployment");
    let (seq, par) = pools();
    let mut group = c.benchmark_group("build_subregions");
    group.sample_size(20);
    group.bench_with_input(BenchmarkId::new("seq", 48), &instance, |b, instance| {
        b.iter(|| seq.install(|| build_subregions(instance).unwrap().subregions.len()))
    });
    group.bench_with_input(BenchmarkId::new("par", 48), &instance, |b, instance| {
        b.iter(|| par.install(|| build_subregions(instance).unwrap().subregions.len()))
    });
    group.finish();
}

fn bench_random_restarts(c: &mut Criterion) {
    let params = GenParams::defaults_for(Variant::P2FullyChargingReward);
    let instance = generate_instance(Variant::P2FullyChargingReward, 40, &params, 3).unwrap();
    let env = make_env(instance).unwrap();
    let (seq, par) = pools();
    let mut group = c.benchmark_group("random_restarts");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new("seq", 100), |b| {
        b.iter(|| seq.install(|| random_solve(env.as_ref(), 7, 100).prize_total))
    });
    group.bench_function(BenchmarkId::new("par", 100), |b| {
        b.iter(|| par.install(|| random_solve(env.as_ref(), 7, 100).prize_total))
    });
    group.finish();
}

fn bench_acs_iterations(c: &mut Criterion) {
    let mut params = GenParams::defaults_for(Variant::P3KCoverage);
    params.alpha = 0.25;
    let instance = (0..400)
        .find_map(|seed| generate_instance(Variant::P3KCoverage, 48, &params, seed).ok())
        .expect("coverable deployment");
    let env = make_env(instance).unwrap();
    let acs = AcsParams {
        agents: 20,
        iterations: 20,
        seed: 1,
        ..AcsParams::default()
    };
    let (seq, par) = pools();
    let mut group = c.benchmark_group("acs_iterations");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("seq", 20), |b| {
        b.iter(|| seq.install(|| acs_solve(env.as_ref(), &acs).map(|s| s.visits.len()).ok()))
    });
    group.bench_function(BenchmarkId::new("par", 20), |b| {
        b.iter(|| par.install(|| acs_solve(env.as_ref(), &acs).map(|s| s.visits.len()).ok()))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_build_subregions,
    bench_random_restarts,
    bench_acs_iterations
);
criterion_main!(benches);
