use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hxreg::{plant_transfer, simulate_output_feedback, synthesize, Profile, SimOptions, C64};
use hxreg_bench::Scenario;
use std::hint::black_box;

fn transfer(c: &mut Criterion) {
    let mut group = c.benchmark_group("transfer_value");
    for n in [501, 2001, 8001] {
        let s = Scenario::heat_exchanger(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| plant_transfer(&s.plant, black_box(C64::new(0.0, 2.0))).unwrap())
        });
    }
    group.finish();
}

fn synthesis(c: &mut Criterion) {
    let mut group = c.benchmark_group("synthesize");
    for n in [501, 2001] {
        let s = Scenario::heat_exchanger(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| synthesize(&s.plant, &s.exo, &Scenario::options()).unwrap())
        });
    }
    group.finish();
}

fn closed_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("output_feedback_20s");
    group.sample_size(10);
    for n in [501, 2001] {
        let s = Scenario::heat_exchanger(n);
        let x0 = Profile::zeros(s.plant.grid());
        let opts = SimOptions::new(20.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| simulate_output_feedback(&s.plant, &s.exo, &s.params, &s.r_w0, &x0, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transfer, synthesis, closed_loop);
criterion_main!(benches);
