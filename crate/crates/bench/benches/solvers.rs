use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mflq_core::noise::NoiseLaw;
use mflq_core::oracle::{tree_laws, InitialLaw};
use mflq_core::random::{random_alm, random_moments, random_multinoise, random_problem};
use mflq_core::simulate::MeanField;
use mflq_core::{
    assemble_quadratic, brute_force_optimal, build_policy, build_tree, simulate_closed_loop, solve_alm_riccati,
    solve_p_form, solve_riccati, solve_riccati_multinoise, AlmProblem, InitSampler, InitialMoments, NoiseSampler,
    SamplerKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn riccati(c: &mut Criterion) {
    let mut g = c.benchmark_group("riccati");
    for (n, m, big_n) in [(2, 2, 10), (4, 4, 50), (8, 4, 100)] {
        let spec = random_problem(&mut ChaCha8Rng::seed_from_u64(1), n, m, big_n);
        let id = format!("n{n}_m{m}_N{big_n}");
        g.bench_with_input(BenchmarkId::new("st_form", &id), &spec, |b, s| b.iter(|| solve_riccati(black_box(s))));
        g.bench_with_input(BenchmarkId::new("p_form", &id), &spec, |b, s| b.iter(|| solve_p_form(black_box(s))));
    }
    for p in [1, 4] {
        let spec = random_multinoise(&mut ChaCha8Rng::seed_from_u64(2), 4, 4, 50, p);
        g.bench_with_input(BenchmarkId::new("multinoise_n4_m4_N50", p), &spec, |b, s| {
            b.iter(|| solve_riccati_multinoise(black_box(s)))
        });
    }
    g.finish();
}

fn alm(c: &mut Criterion) {
    let example = AlmProblem::three_period_example();
    c.bench_function("alm/three_period", |b| b.iter(|| solve_alm_riccati(black_box(&example))));
    let big = random_alm(&mut ChaCha8Rng::seed_from_u64(3), 20, 60);
    c.bench_function("alm/m20_N60", |b| b.iter(|| solve_alm_riccati(black_box(&big))));
}

fn oracle(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = random_problem(&mut rng, 2, 2, 3).to_multinoise();
    let init = InitialLaw::from_moments(&random_moments(&mut rng, 2));
    let laws = tree_laws(&spec);
    c.bench_function("oracle/n2_m2_N3", |b| {
        b.iter(|| {
            let tree = build_tree(&spec, &laws, &init).unwrap();
            brute_force_optimal(&assemble_quadratic(&tree, &spec)).unwrap()
        })
    });
}

fn simulation(c: &mut Criterion) {
    let spec = mflq_core::lift_to_multinoise(&AlmProblem::three_period_example());
    let policy = build_policy(&solve_riccati_multinoise(&spec).unwrap()).unwrap();
    let noise = NoiseSampler::new(SamplerKind::Gaussian, NoiseLaw::from_problem(&spec), 42).unwrap();
    let init = InitSampler::new(SamplerKind::Gaussian, InitialMoments::standard(1));
    let mut g = c.benchmark_group("simulate");
    g.sample_size(20);
    for paths in [10_000, 100_000] {
        g.bench_with_input(BenchmarkId::new("three_period", paths), &paths, |b, &p| {
            b.iter(|| simulate_closed_loop(&spec, &policy, &init, &noise, p, MeanField::Analytic).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, riccati, alm, oracle, simulation);
criterion_main!(benches);
