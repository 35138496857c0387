//! Monte Carlo simulation of the closed-loop system.
//!
//! Paths advance in lockstep over `k`. Each path owns a ChaCha8 stream
//! selected by its index, so results do not depend on scheduling or on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::MultiNoiseProblemSpec;
use crate::noise::{InitSampler, NoiseSampler};
use crate::policy::{control_unchecked, policy_expected_trajectory, ExpectedTrajectory, FeedbackPolicy};

/// Source of the expectations entering dynamics, controls and cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanField {
    /// Exact means from the forward recursion of the policy.
    #[default]
    Analytic,
    /// Cross-path sample means at each step.
    PopulationCoupling,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    pub n_paths: usize,
    pub mean_field: MeanField,
    #[serde(skip)]
    pub terminal_x: Vec<Vector>,
    #[serde(skip)]
    pub terminal_y: Vec<Vector>,
    #[serde(skip)]
    pub costs: Vec<f64>,
    pub cost_mean: f64,
    pub cost_std_err: f64,
    pub expected: ExpectedTrajectory,
    /// Cross-path means of `x_k`, `k = 0..=N`.
    #[serde(skip)]
    pub sample_mean_x: Vec<Vector>,
    /// Standard errors of `sample_mean_x`, per component.
    #[serde(skip)]
    pub sample_se_x: Vec<Vector>,
}

struct PathState {
    x: Vector,
    y: Vector,
    cost: f64,
    rng: ChaCha8Rng,
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Sample mean and per-component standard error, summing in path order.
fn population_moments(states: &[Vector]) -> (Vector, Vector) {
    let n = states.len() as f64;
    let dim = states[0].len();
    let mut mean = Vector::zeros(dim);
    for s in states {
        mean += s;
    }
    mean /= n;
    let mut var = Vector::zeros(dim);
    for s in states {
        let d = s - &mean;
        var += d.component_mul(&d);
    }
    var /= n - 1.0;
    (mean, var.map(|v| (v / n).sqrt()))
}

fn quad(m: &Matrix, v: &Vector) -> f64 {
    v.dot(&(m * v))
}

/// Simulates `n_paths` closed-loop paths. Initial states and noises use the
/// sampler's seed; path `i` uses stream `i`.
pub fn simulate_closed_loop(
    spec: &MultiNoiseProblemSpec,
    policy: &FeedbackPolicy,
    init: &InitSampler,
    noise: &NoiseSampler,
    n_paths: usize,
    mean_field: MeanField,
) -> Result<SimulationResult> {
    let base = &spec.base;
    let ch = &spec.noise;
    let (n, big_n, p) = (base.state_dim, base.horizon, ch.noise_dim);
    if n_paths < 2 {
        return Err(Error::InvalidInput("n_paths must be at least 2".into()));
    }
    if policy.horizon() != big_n || policy.state_dim() != n || policy.control_dim() != base.control_dim
    {
        return Err(Error::DimensionMismatch("policy does not match problem".into()));
    }
    if noise.noise_dim() != p || noise.law().horizon() != big_n {
        return Err(Error::DimensionMismatch("noise law does not match problem".into()));
    }
    if init.moments.dim() != n {
        return Err(Error::DimensionMismatch("initial law does not match problem".into()));
    }
    let expected = policy_expected_trajectory(base, policy, &init.moments.mean_x, &init.moments.mean_y)?;

    let seed = noise.seed;
    let mut paths: Vec<PathState> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let (x, y) = init.sample(&mut rng);
            PathState { x, y, cost: 0.0, rng }
        })
        .collect();

    let mut sample_mean_x = Vec::with_capacity(big_n + 1);
    let mut sample_se_x = Vec::with_capacity(big_n + 1);

    for k in 0..=big_n {
        let xs: Vec<Vector> = paths.iter().map(|s| s.x.clone()).collect();
        let (mx, sx) = population_moments(&xs);
        let (ex, ey) = match mean_field {
            MeanField::Analytic => (expected.ex[k].clone(), expected.ey[k].clone()),
            MeanField::PopulationCoupling => {
                let ys: Vec<Vector> = paths.iter().map(|s| s.y.clone()).collect();
                (mx.clone(), population_moments(&ys).0)
            }
        };
        sample_mean_x.push(mx);
        sample_se_x.push(sx);

        let q = &base.q[k];
        let qb = &base.q_bar[k];
        let mean_gap = &ex - &ey;
        let mean_state_cost = quad(qb, &mean_gap);

        if k == big_n {
            paths.par_iter_mut().for_each(|s| {
                s.cost += quad(q, &(&s.x - &s.y)) + mean_state_cost;
            });
            break;
        }

        let g = &policy.gains[k];
        let eu = &g.kx_bar * &ex + &g.ky_bar * &ey;
        let mean_cost = mean_state_cost + quad(&base.r_bar[k], &eu);
        let (a, ab, b, bb, f, fb) = (
            &base.a[k],
            &base.a_bar[k],
            &base.b[k],
            &base.b_bar[k],
            &base.f[k],
            &base.f_bar[k],
        );
        let drift_x_mean = ab * &ex + bb * &eu;
        let drift_y_mean = fb * &ey;
        let noise_x_mean: Vec<Vector> = (0..p)
            .map(|i| &ch.c_bar[k][i] * &ex + &ch.d_bar[k][i] * &eu)
            .collect();
        let noise_y_mean: Vec<Vector> = (0..p).map(|i| &ch.g_bar[k][i] * &ey).collect();

        let failed = paths
            .par_iter_mut()
            .enumerate()
            .map(|(idx, s)| {
                let u = control_unchecked(g, &s.x, &ex, &s.y, &ey);
                s.cost += quad(q, &(&s.x - &s.y)) + quad(&base.r[k], &u) + mean_cost;
                let (w, v) = noise.sample(k, &mut s.rng);
                let mut x_next = a * &s.x + b * &u + &drift_x_mean;
                let mut y_next = f * &s.y + &drift_y_mean;
                for i in 0..p {
                    if w[i] != 0.0 {
                        let load = &ch.c[k][i] * &s.x + &ch.d[k][i] * &u + &noise_x_mean[i];
                        x_next += load * w[i];
                    }
                    if v[i] != 0.0 {
                        let load = &ch.g[k][i] * &s.y + &noise_y_mean[i];
                        y_next += load * v[i];
                    }
                }
                s.x = x_next;
                s.y = y_next;
                let finite = s.x.iter().chain(s.y.iter()).all(|z| z.is_finite()) && s.cost.is_finite();
                (!finite).then_some(idx)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .min();
        if let Some(path) = failed {
            return Err(Error::NonFinite { path, k: k + 1 });
        }
    }

    let costs: Vec<f64> = paths.iter().map(|s| s.cost).collect();
    let (cost_mean, cost_std_err) = estimate_cost(&costs);
    Ok(SimulationResult {
        n_paths,
        mean_field,
        terminal_x: paths.iter().map(|s| s.x.clone()).collect(),
        terminal_y: paths.iter().map(|s| s.y.clone()).collect(),
        costs,
        cost_mean,
        cost_std_err,
        expected,
        sample_mean_x,
        sample_se_x,
    })
}

/// Sample mean and standard error `s/√n` (with the `n − 1` sample variance).
pub fn estimate_cost(costs: &[f64]) -> (f64, f64) {
    let n = costs.len() as f64;
    if costs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = costs.iter().sum::<f64>() / n;
    if costs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error of per-path differences `b − a`. Both runs must
/// share seed and path count, which makes the difference a common-random-
/// numbers estimate.
pub fn paired_difference(a: &SimulationResult, b: &SimulationResult) -> Result<(f64, f64)> {
    if a.costs.len() != b.costs.len() {
        return Err(Error::DimensionMismatch("runs have different path counts".into()));
    }
    let diffs: Vec<f64> = a.costs.iter().zip(&b.costs).map(|(x, y)| y - x).collect();
    Ok(estimate_cost(&diffs))
}
