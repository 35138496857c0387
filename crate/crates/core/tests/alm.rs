mod common;

use common::rng;
use mflq_core::alm::{
    alm_expected_means, alm_gains, alm_optimal_value, expected_terminal_equity, lift_to_multinoise,
    pinv_rank_one, reference, solve_alm_riccati, validate_alm, AlmProblem,
};
use mflq_core::linalg::{pinv_symmetric, Matrix, Vector};
use mflq_core::model::InitialMoments;
use mflq_core::policy::{build_policy, expected_trajectory, optimal_cost};
use mflq_core::random::{random_alm, random_moments};
use mflq_core::riccati::solve_riccati_multinoise;
use rand::Rng;

fn example() -> (AlmProblem, mflq_core::alm::AlmRiccati) {
    let alm = AlmProblem::three_period_example();
    let sol = solve_alm_riccati(&alm).unwrap();
    (alm, sol)
}

#[test]
fn example_value_sequences() {
    let (alm, sol) = example();
    assert!(validate_alm(&alm).ok);
    for k in 0..=3 {
        assert!((sol.sx[k] - reference::SX[k]).abs() < 1e-4, "Sx[{k}] = {}", sol.sx[k]);
        assert!((sol.sxy[k] - reference::SXY[k]).abs() < 1e-4, "Sxy[{k}] = {}", sol.sxy[k]);
        assert!((sol.sy[k] - reference::SY[k]).abs() < 1e-4, "Sy[{k}] = {}", sol.sy[k]);
        assert!(sol.tx[k].abs() < 1e-12);
        assert!(sol.txy[k].abs() < 1e-12);
        assert!(sol.ty[k].abs() < 1e-12);
    }
}

#[test]
fn example_wealth_gains() {
    let (_, sol) = example();
    let gains = alm_gains(&sol).unwrap();
    for k in 0..3 {
        for i in 0..3 {
            assert!((gains[k].ox[i] - reference::OX[k][i]).abs() < 1e-4);
        }
        assert!(gains[k].ox_bar.iter().chain(&gains[k].oy_bar).all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn example_liability_gains_later_steps() {
    let (_, sol) = example();
    let gains = alm_gains(&sol).unwrap();
    for k in 1..3 {
        for i in 0..3 {
            assert!((gains[k].oy[i] - reference::OY[k][i]).abs() < 1e-4);
        }
    }
}

#[test]
fn reference_first_liability_row_is_scaled_by_a_over_f() {
    // The reference first row equals the computed one times a/f = 5/6.
    let (alm, sol) = example();
    let gains = alm_gains(&sol).unwrap();
    let scale = alm.a[0] / alm.f[0];
    for i in 0..3 {
        let computed = gains[0].oy[i];
        assert!((computed - reference::OY[0][i]).abs() > 1e-3);
        assert!((computed * scale - reference::OY[0][i]).abs() < 1e-4);
    }
}

#[test]
fn liability_gain_is_minus_f_ratio_of_wealth_gain() {
    // O^y = −(f S^{xy})/(a S^x) O^x from the shared kernel W1.
    let (alm, sol) = example();
    let gains = alm_gains(&sol).unwrap();
    for k in 0..3 {
        let ratio = alm.f[k] * sol.sxy[k + 1] / (alm.a[k] * sol.sx[k + 1]);
        for i in 0..3 {
            assert!((gains[k].oy[i] - ratio * gains[k].ox[i]).abs() < 1e-15);
        }
    }
}

#[test]
fn example_mean_dynamics_and_equity() {
    let (alm, sol) = example();
    let lifted = lift_to_multinoise(&alm);
    let general = solve_riccati_multinoise(&lifted).unwrap();
    let mut r = rng(5);
    for _ in 0..10 {
        let (ex0, ey0) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let (ex, ey) = alm_expected_means(&alm, &sol, ex0, ey0).unwrap();
        let traj =
            expected_trajectory(&lifted, &general, &Vector::from_element(1, ex0), &Vector::from_element(1, ey0))
                .unwrap();
        for k in 0..3 {
            assert!((traj.n_k[k][(0, 0)] - 0.5).abs() < 1e-15);
            assert!(traj.m_k[k][(0, 0)].abs() < 1e-15);
        }
        for k in 0..=3 {
            assert!((traj.ex[k][0] - ex[k]).abs() < 1e-12);
            assert!((traj.ey[k][0] - ey[k]).abs() < 1e-12);
        }
        let equity = expected_terminal_equity(&alm, &sol, ex0, ey0).unwrap();
        assert!((equity - (0.125 * ex0 - 0.216 * ey0)).abs() < 1e-12);
    }
}

#[test]
fn example_value_at_unit_variances() {
    let (alm, sol) = example();
    let init = InitialMoments::standard(1);
    let v = alm_optimal_value(&sol, &init);
    assert!((v - 0.0530).abs() < 1e-4, "{v}");
    let general = solve_riccati_multinoise(&lift_to_multinoise(&alm)).unwrap();
    assert!((optimal_cost(&general, &init) - v).abs() < 1e-14);
}

#[test]
fn lift_matches_scalar_recursion() {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = r.random_range(1..=4);
        let big_n = r.random_range(1..=6);
        let alm = random_alm(&mut r, m, big_n);
        let sol = solve_alm_riccati(&alm).unwrap();
        let general = solve_riccati_multinoise(&lift_to_multinoise(&alm)).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        for k in 0..=big_n {
            for (a, b) in [
                (sol.sx[k], general.sx[k][(0, 0)]),
                (sol.tx[k], general.tx[k][(0, 0)]),
                (sol.sxy[k], general.sxy[k][(0, 0)]),
                (sol.txy[k], general.txy[k][(0, 0)]),
                (sol.sy[k], general.sy[k][(0, 0)]),
                (sol.ty[k], general.ty[k][(0, 0)]),
            ] {
                if a != b {
                    worst = worst.max(rel(a, b));
                }
            }
        }
        let gains = alm_gains(&sol).unwrap();
        let policy = build_policy(&general).unwrap();
        for k in 0..big_n {
            for i in 0..m {
                assert!((gains[k].ox[i] - policy.gains[k].kx[(i, 0)]).abs() < 1e-12);
                assert!((gains[k].oy_bar[i] - policy.gains[k].ky_bar[(i, 0)]).abs() < 1e-12);
            }
        }
        let init = random_moments(&mut r, 1);
        let v = alm_optimal_value(&sol, &init);
        assert!((v - optimal_cost(&general, &init)).abs() < 1e-10 * (1.0 + v.abs()));
    }
    assert!(worst < 1e-12, "{worst:e}");
}

#[test]
fn sherman_morrison_form_of_value_updates() {
    // W1 = (R + S Cov) + S E[B]E[B]ᵀ, so 1 − S·E[B]W1⁻¹E[B]ᵀ = 1/(1 + S c)
    // with c = E[B](R + S Cov)⁻¹E[B]ᵀ.
    let mut r = rng(7);
    for _ in 0..50 {
        let alm = random_alm(&mut r, 3, 4);
        let sol = solve_alm_riccati(&alm).unwrap();
        for k in 0..4 {
            let eb = &alm.mean_excess[k];
            let (sx, tx) = (sol.sx[k + 1], sol.tx[k + 1]);
            let base = &alm.r[k] + &alm.cov_excess[k] * sx;
            let c = eb.dot(&(base.clone().try_inverse().unwrap() * eb));
            let a = alm.a[k];
            assert!((sol.sx[k] - a * a * sx / (1.0 + sx * c)).abs() < 1e-12 * (1.0 + sx.abs()));
            let c2 = c;
            let expect_tx = a * a * tx / (1.0 + tx * c2);
            assert!((sol.tx[k] - expect_tx).abs() < 1e-12 * (1.0 + tx.abs()));
        }
    }
}

fn random_psd_with_range(r: &mut impl Rng, n: usize) -> (Matrix, Vector) {
    let rank = r.random_range(1..=n);
    let z = Matrix::from_fn(n, rank, |_, _| r.random_range(-1.0..1.0));
    let m = &z * z.transpose();
    let coef = Vector::from_fn(rank, |_, _| r.random_range(-1.0..1.0));
    (m, z * coef)
}

#[test]
fn rank_one_pseudo_inverse_matches_direct() {
    let mut r = rng(8);
    for _ in 0..100 {
        let n = r.random_range(1..=6);
        let (m, c) = random_psd_with_range(&mut r, n);
        let x = pinv_rank_one(&m, &c).unwrap();
        let a = &m + &c * c.transpose();
        let direct = pinv_symmetric(&a, 1e-12);
        let scale = 1.0f64.max(direct.amax());
        assert!((&x - &direct).amax() < 1e-10 * scale);
        let tol = 1e-9 * scale * (1.0 + a.amax()).powi(2);
        assert!((&a * &x * &a - &a).amax() < tol);
        assert!((&x * &a * &x - &x).amax() < tol);
        assert!(((&a * &x).transpose() - &a * &x).amax() < tol);
        assert!(((&x * &a).transpose() - &x * &a).amax() < tol);
    }
}
