use criterion::{criterion_group, criterion_main, Criterion};
use pompkit_bench::outbreak;
use pompkit_core::models::sir::sir_defaults;
use pompkit_core::{
    euler_multinomial_exits, mif2, particle_filter, simulate_path, sir_model, Mif2Settings,
    ParamSwarm, PfilterSettings, SimMethod, TimeSeries,
};
use std::hint::black_box;

fn bench_euler_multinomial(c: &mut Criterion) {
    let mut rng = pompkit_core::stream(1, &[1]);
    c.bench_function("euler_multinomial_exits_n10000", |b| {
        b.iter(|| {
            black_box(euler_multinomial_exits(
                black_box(10_000),
                black_box(&[0.4, 0.02]),
                0.01,
                &mut rng,
            ))
        })
    });
}

fn bench_simulators(c: &mut Criterion) {
    let grid = TimeSeries::weekly_grid(50);
    let mut group = c.benchmark_group("simulate_50_weeks");
    group.sample_size(20);
    for (name, method, tau) in [
        ("gillespie", SimMethod::Gillespie, 0.01),
        ("tauleap_0.01", SimMethod::TauLeap, 0.01),
        ("tauleap_0.05", SimMethod::TauLeap, 0.05),
    ] {
        let model = sir_model(method, tau).unwrap();
        let params = sir_defaults(model.space());
        let mut seed = 0u64;
        group.bench_function(name, |b| {
            b.iter(|| {
                seed += 1;
                black_box(simulate_path(&model, &params, grid.times(), seed).unwrap())
            })
        });
    }
    group.finish();
}

fn bench_particle_filter(c: &mut Criterion) {
    let (model, params, data) = outbreak();
    let mut group = c.benchmark_group("particle_filter");
    group.sample_size(10);
    for j in [100usize, 500] {
        let settings = PfilterSettings::with_particles(j);
        let mut seed = 0u64;
        group.bench_function(format!("J{j}"), |b| {
            b.iter(|| {
                seed += 1;
                black_box(particle_filter(&model, &data, &params, &settings, seed).unwrap())
            })
        });
    }
    group.finish();
}

fn bench_mif2_iteration(c: &mut Criterion) {
    let (model, params, data) = outbreak();
    let settings = Mif2Settings {
        iterations: 1,
        particles: 200,
        ..Mif2Settings::default()
    };
    let swarm = ParamSwarm::replicate(&params, 200).unwrap();
    let mut group = c.benchmark_group("mif2_single_iteration");
    group.sample_size(10);
    let mut seed = 0u64;
    group.bench_function("J200", |b| {
        b.iter(|| {
            seed += 1;
            black_box(mif2(&model, &data, &swarm, &settings, seed).unwrap())
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_euler_multinomial,
    bench_simulators,
    bench_particle_filter,
    bench_mif2_iteration
);
criterion_main!(benches);
