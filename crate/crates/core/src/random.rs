//! Random valid instances for property tests, verification and benchmarks.

use rand::Rng;

use crate::alm::AlmProblem;
use crate::linalg::{symmetrize, Matrix, Vector};
use crate::model::{BaseProblem, InitialMoments, MultiNoiseProblemSpec, NoiseChannels, ProblemSpec, ScalarNoise};

fn uniform<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

fn gram<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Matrix {
    let m = uniform(rng, n, n, scale);
    symmetrize(&(&m * m.transpose()))
}

fn seq<R: Rng + ?Sized>(rng: &mut R, len: usize, rows: usize, cols: usize, scale: f64) -> Vec<Matrix> {
    (0..len).map(|_| uniform(rng, rows, cols, scale)).collect()
}

/// `Q ⪰ 0`, `Q + Q̄ ⪰ 0` with `Q̄` typically indefinite;
/// `R ≻ 0`, `R + R̄ ≻ 0` likewise.
fn random_base<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, big_n: usize) -> BaseProblem {
    let mut b = BaseProblem::zeros(big_n, n, m);
    b.a = seq(rng, big_n, n, n, 0.8);
    b.a_bar = seq(rng, big_n, n, n, 0.3);
    b.b = seq(rng, big_n, n, m, 0.8);
    b.b_bar = seq(rng, big_n, n, m, 0.3);
    b.f = seq(rng, big_n, n, n, 0.8);
    b.f_bar = seq(rng, big_n, n, n, 0.3);
    for k in 0..=big_n {
        let q = gram(rng, n, 1.0);
        let extra = gram(rng, n, 0.5);
        b.q_bar[k] = symmetrize(&(extra - &q * 0.5));
        b.q[k] = q;
    }
    for k in 0..big_n {
        let r = gram(rng, m, 1.0) + Matrix::identity(m, m) * 0.5;
        let extra = gram(rng, m, 0.5);
        b.r_bar[k] = symmetrize(&(extra - &r * 0.3));
        b.r[k] = r;
    }
    b
}

pub fn random_problem<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, big_n: usize) -> ProblemSpec {
    let base = random_base(rng, n, m, big_n);
    let noise = ScalarNoise {
        c: seq(rng, big_n, n, n, 0.4),
        c_bar: seq(rng, big_n, n, n, 0.2),
        d: seq(rng, big_n, n, m, 0.4),
        d_bar: seq(rng, big_n, n, m, 0.2),
        g: seq(rng, big_n, n, n, 0.4),
        g_bar: seq(rng, big_n, n, n, 0.2),
        rho: rng.random_range(-0.9..0.9),
    };
    ProblemSpec::new(base, noise).expect("consistent dimensions")
}

/// Random valid joint second moment `[[α, γ], [γᵀ, β]]`.
pub fn random_joint_moment<R: Rng + ?Sized>(rng: &mut R, p: usize) -> (Matrix, Matrix, Matrix) {
    let z = uniform(rng, 2 * p, 2 * p, 1.0);
    let joint = symmetrize(&(&z * z.transpose())) / (2 * p) as f64 + Matrix::identity(2 * p, 2 * p) * 0.05;
    (
        joint.view((0, 0), (p, p)).into_owned(),
        joint.view((p, p), (p, p)).into_owned(),
        joint.view((0, p), (p, p)).into_owned(),
    )
}

pub fn random_multinoise<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    big_n: usize,
    p: usize,
) -> MultiNoiseProblemSpec {
    let base = random_base(rng, n, m, big_n);
    let mut noise = NoiseChannels::zeros(big_n, n, m, p);
    for k in 0..big_n {
        noise.c[k] = seq(rng, p, n, n, 0.4);
        noise.c_bar[k] = seq(rng, p, n, n, 0.2);
        noise.d[k] = seq(rng, p, n, m, 0.4);
        noise.d_bar[k] = seq(rng, p, n, m, 0.2);
        noise.g[k] = seq(rng, p, n, n, 0.4);
        noise.g_bar[k] = seq(rng, p, n, n, 0.2);
        let (alpha, beta, gamma) = random_joint_moment(rng, p);
        noise.alpha[k] = alpha;
        noise.beta[k] = beta;
        noise.gamma[k] = gamma;
    }
    MultiNoiseProblemSpec::new(base, noise).expect("consistent dimensions")
}

pub fn random_alm<R: Rng + ?Sized>(rng: &mut R, m: usize, big_n: usize) -> AlmProblem {
    let q_n = rng.random_range(0.1..2.0);
    AlmProblem::new(
        big_n,
        m,
        (0..big_n).map(|_| rng.random_range(0.5..1.2)).collect(),
        (0..big_n).map(|_| rng.random_range(0.5..1.2)).collect(),
        (0..big_n).map(|_| Vector::from_fn(m, |_, _| rng.random_range(-0.3..0.5))).collect(),
        (0..big_n).map(|_| gram(rng, m, 0.5)).collect(),
        (0..big_n).map(|_| gram(rng, m, 0.5) + Matrix::identity(m, m) * 0.2).collect(),
        q_n,
        rng.random_range(-q_n..1.0),
    )
    .expect("consistent dimensions")
}

pub fn random_moments<R: Rng + ?Sized>(rng: &mut R, n: usize) -> InitialMoments {
    let z = uniform(rng, 2 * n, 2 * n, 1.0);
    let joint = symmetrize(&(&z * z.transpose()));
    InitialMoments {
        mean_x: Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
        mean_y: Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
        cov_x: joint.view((0, 0), (n, n)).into_owned(),
        cov_y: joint.view((n, n), (n, n)).into_owned(),
        cov_xy: joint.view((0, n), (n, n)).into_owned(),
    }
}
