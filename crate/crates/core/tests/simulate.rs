mod common;

use common::rng;
use mflq_core::alm::{lift_to_multinoise, AlmProblem};
use mflq_core::linalg::{Matrix, Vector};
use mflq_core::model::{InitialMoments, MultiNoiseProblemSpec};
use mflq_core::noise::{InitSampler, NoiseLaw, NoiseSampler, SamplerKind};
use mflq_core::policy::{build_policy, optimal_cost, policy_cost, FeedbackPolicy};
use mflq_core::random::{random_moments, random_multinoise, random_problem};
use mflq_core::riccati::solve_riccati_multinoise;
use mflq_core::simulate::{paired_difference, simulate_closed_loop, MeanField, SimulationResult};
use rand::Rng;

fn setup(seed: u64) -> (MultiNoiseProblemSpec, FeedbackPolicy, InitialMoments) {
    let mut r = rng(seed);
    let spec = random_multinoise(&mut r, 2, 2, 4, 2);
    let policy = build_policy(&solve_riccati_multinoise(&spec).unwrap()).unwrap();
    (spec, policy, random_moments(&mut r, 2))
}

fn run(
    spec: &MultiNoiseProblemSpec,
    policy: &FeedbackPolicy,
    init: &InitialMoments,
    kind: SamplerKind,
    seed: u64,
    n_paths: usize,
    mean_field: MeanField,
) -> SimulationResult {
    let noise = NoiseSampler::new(kind, NoiseLaw::from_problem(spec), seed).unwrap();
    let init = InitSampler::new(kind, init.clone());
    simulate_closed_loop(spec, policy, &init, &noise, n_paths, mean_field).unwrap()
}

#[test]
fn same_seed_same_result() {
    let (spec, policy, init) = setup(51);
    let a = run(&spec, &policy, &init, SamplerKind::Gaussian, 7, 500, MeanField::Analytic);
    let b = run(&spec, &policy, &init, SamplerKind::Gaussian, 7, 500, MeanField::Analytic);
    assert_eq!(a.costs, b.costs);
    assert_eq!(a.terminal_x, b.terminal_x);
    let c = run(&spec, &policy, &init, SamplerKind::Gaussian, 8, 500, MeanField::Analytic);
    assert_ne!(a.costs, c.costs);
}

#[test]
fn result_does_not_depend_on_thread_count() {
    let (spec, policy, init) = setup(52);
    let with_threads = |t: usize, mf: MeanField| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| run(&spec, &policy, &init, SamplerKind::Rademacher, 3, 2000, mf))
    };
    for mf in [MeanField::Analytic, MeanField::PopulationCoupling] {
        let one = with_threads(1, mf);
        let four = with_threads(4, mf);
        assert_eq!(one.costs, four.costs);
        assert_eq!(one.cost_mean.to_bits(), four.cost_mean.to_bits());
        assert_eq!(one.sample_mean_x, four.sample_mean_x);
    }
}

fn empirical_moments(sampler: &NoiseSampler, k: usize, draws: usize) -> (Vector, Matrix) {
    let p = sampler.noise_dim();
    let mut r = rng(99);
    let mut mean = Vector::zeros(2 * p);
    let mut second = Matrix::zeros(2 * p, 2 * p);
    for _ in 0..draws {
        let (w, v) = sampler.sample(k, &mut r);
        let z = Vector::from_iterator(2 * p, w.iter().chain(v.iter()).copied());
        mean += &z;
        second += &z * z.transpose();
    }
    (mean / draws as f64, second / draws as f64)
}

#[test]
fn sampler_moments_match_law() {
    let mut r = rng(53);
    let spec = random_multinoise(&mut r, 1, 1, 2, 2);
    let law = NoiseLaw::from_problem(&spec);
    let draws = 1_000_000;
    for kind in [SamplerKind::Gaussian, SamplerKind::Rademacher] {
        let sampler = NoiseSampler::new(kind, law.clone(), 1).unwrap();
        for k in 0..2 {
            let (mean, second) = empirical_moments(&sampler, k, draws);
            let joint = law.joint(k);
            assert!(mean.amax() < 5e-3, "{kind:?} mean {}", mean.amax());
            assert!((&second - &joint).amax() < 1e-2, "{kind:?} k={k}");
        }
    }
    // four-point law for one channel with unequal variances
    let scalar = NoiseLaw {
        alpha: vec![Matrix::from_element(1, 1, 0.5)],
        beta: vec![Matrix::from_element(1, 1, 2.0)],
        gamma: vec![Matrix::from_element(1, 1, -0.6)],
    };
    let sampler = NoiseSampler::new(SamplerKind::Rademacher, scalar.clone(), 2).unwrap();
    let (mean, second) = empirical_moments(&sampler, 0, draws);
    assert!(mean.amax() < 5e-3);
    assert!((&second - scalar.joint(0)).amax() < 1e-2);
}

#[test]
fn invalid_noise_moment_is_rejected() {
    let law = NoiseLaw {
        alpha: vec![Matrix::from_element(1, 1, 1.0)],
        beta: vec![Matrix::from_element(1, 1, 1.0)],
        gamma: vec![Matrix::from_element(1, 1, 1.5)],
    };
    assert!(NoiseSampler::new(SamplerKind::Gaussian, law, 0).is_err());
}

#[test]
fn monte_carlo_cost_matches_optimal_cost() {
    let (spec, policy, init) = setup(54);
    let exact = optimal_cost(&solve_riccati_multinoise(&spec).unwrap(), &init);
    for kind in [SamplerKind::Gaussian, SamplerKind::Rademacher] {
        let res = run(&spec, &policy, &init, kind, 11, 40_000, MeanField::Analytic);
        let z = (res.cost_mean - exact) / res.cost_std_err;
        assert!(z.abs() < 4.0, "{kind:?}: z = {z}");
    }
}

#[test]
fn sample_means_track_expected_trajectory() {
    let (spec, policy, init) = setup(55);
    let res = run(&spec, &policy, &init, SamplerKind::Gaussian, 12, 40_000, MeanField::Analytic);
    for k in 0..=spec.base.horizon {
        for i in 0..2 {
            let z = (res.sample_mean_x[k][i] - res.expected.ex[k][i]) / res.sample_se_x[k][i].max(1e-300);
            assert!(z.abs() < 4.5, "k={k} i={i} z={z}");
        }
    }
}

#[test]
fn population_coupling_converges_to_analytic() {
    let (spec, policy, init) = setup(56);
    let exact = optimal_cost(&solve_riccati_multinoise(&spec).unwrap(), &init);
    let res = run(&spec, &policy, &init, SamplerKind::Gaussian, 13, 40_000, MeanField::PopulationCoupling);
    let z = (res.cost_mean - exact) / res.cost_std_err;
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn noiseless_paths_cost_exactly_the_optimum() {
    let mut r = rng(57);
    let mut spec = random_problem(&mut r, 2, 2, 3).to_multinoise();
    for k in 0..3 {
        spec.noise.alpha[k] = Matrix::zeros(1, 1);
        spec.noise.beta[k] = Matrix::zeros(1, 1);
        spec.noise.gamma[k] = Matrix::zeros(1, 1);
    }
    let sol = solve_riccati_multinoise(&spec).unwrap();
    let policy = build_policy(&sol).unwrap();
    let init = InitialMoments::deterministic(
        Vector::from_fn(2, |_, _| r.random_range(-1.0..1.0)),
        Vector::from_fn(2, |_, _| r.random_range(-1.0..1.0)),
    );
    let exact = optimal_cost(&sol, &init);
    let res = run(&spec, &policy, &init, SamplerKind::Gaussian, 0, 4, MeanField::Analytic);
    for c in &res.costs {
        assert!((c - exact).abs() <= 1e-12 * (1.0 + exact.abs()), "{c} vs {exact}");
    }
}

#[test]
fn paired_differences_detect_suboptimal_gains() {
    let alm = AlmProblem::three_period_example();
    let spec = lift_to_multinoise(&alm);
    let policy = build_policy(&solve_riccati_multinoise(&spec).unwrap()).unwrap();
    let init = InitialMoments::standard(1);
    let base = run(&spec, &policy, &init, SamplerKind::Gaussian, 42, 20_000, MeanField::Analytic);
    let mut worse = policy.clone();
    worse.gains[1].kx *= 3.0;
    let other = run(&spec, &worse, &init, SamplerKind::Gaussian, 42, 20_000, MeanField::Analytic);
    let (diff, se) = paired_difference(&base, &other).unwrap();
    assert!(diff > 3.0 * se, "{diff} vs {se}");
    let exact_gap = policy_cost(&spec, &worse, &init) - policy_cost(&spec, &policy, &init);
    assert!(((diff - exact_gap) / se).abs() < 4.0);
}

#[test]
fn rejects_too_few_paths() {
    let (spec, policy, init) = setup(58);
    let noise = NoiseSampler::new(SamplerKind::Gaussian, NoiseLaw::from_problem(&spec), 0).unwrap();
    let init = InitSampler::new(SamplerKind::Gaussian, init);
    assert!(simulate_closed_loop(&spec, &policy, &init, &noise, 1, MeanField::Analytic).is_err());
}
