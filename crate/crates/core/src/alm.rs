//! Asset-liability management with one wealth state and `m` risky assets.
//!
//! ```text
//! x_{k+1} = a_k x_k + B_k u_k,     y_{k+1} = f_k y_k,
//! ```
//!
//! where `B_k` is the random row of excess returns with mean `E[B_k]` and
//! covariance `Cov(B_k)`. The cost is the terminal
//! `q_N E[(x_N − y_N)²] + q̄_N (E[x_N − y_N])²` plus `Σ E[uᵀR_k u]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{is_psd, pinv_symmetric, symmetrize, Matrix, SpdFactor, Vector};
use crate::model::{
    validate_problem, BaseProblem, InitialMoments, MultiNoiseProblemSpec, NoiseChannels,
    ValidationReport,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AlmProblem {
    pub horizon: usize,
    pub asset_count: usize,
    pub a: Vec<f64>,
    pub f: Vec<f64>,
    pub mean_excess: Vec<Vector>,
    pub cov_excess: Vec<Matrix>,
    pub r: Vec<Matrix>,
    pub q_n: f64,
    pub q_bar_n: f64,
}

impl AlmProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        horizon: usize,
        asset_count: usize,
        a: Vec<f64>,
        f: Vec<f64>,
        mean_excess: Vec<Vector>,
        cov_excess: Vec<Matrix>,
        r: Vec<Matrix>,
        q_n: f64,
        q_bar_n: f64,
    ) -> Result<Self> {
        let (big_n, m) = (horizon, asset_count);
        if big_n == 0 || m == 0 {
            return Err(Error::InvalidInput("horizon and asset_count must be positive".into()));
        }
        for (name, len) in [
            ("a", a.len()),
            ("f", f.len()),
            ("mean_excess", mean_excess.len()),
            ("cov_excess", cov_excess.len()),
            ("R", r.len()),
        ] {
            if len != big_n {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: expected {big_n} steps, got {len}"
                )));
            }
        }
        for k in 0..big_n {
            if mean_excess[k].len() != m {
                return Err(Error::DimensionMismatch(format!("mean_excess[{k}] must have {m} entries")));
            }
            for (name, mat) in [("cov_excess", &cov_excess[k]), ("R", &r[k])] {
                if mat.shape() != (m, m) {
                    return Err(Error::DimensionMismatch(format!("{name}[{k}] must be {m}x{m}")));
                }
            }
        }
        let finite = a.iter().chain(&f).chain([&q_n, &q_bar_n]).all(|v| v.is_finite())
            && mean_excess.iter().all(|v| v.iter().all(|x| x.is_finite()))
            && cov_excess.iter().chain(&r).all(|mat| mat.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidInput("non-finite ALM coefficient".into()));
        }
        Ok(Self {
            horizon,
            asset_count,
            a,
            f,
            mean_excess,
            cov_excess: cov_excess.iter().map(symmetrize).collect(),
            r: r.iter().map(symmetrize).collect(),
            q_n,
            q_bar_n,
        })
    }

    /// The three-period, three-asset example: `a = 0.5`, `f = 0.6`,
    /// `E[B] = (0.2, 0.3, 0.4)`, `R = I`, `q_3 = 1`, `q̄_3 = −1`.
    pub fn three_period_example() -> Self {
        let big_n = 3;
        let mean = Vector::from_vec(vec![0.2, 0.3, 0.4]);
        let cov = Matrix::from_row_slice(3, 3, &[1.0, 0.2, 0.3, 0.2, 1.0, 0.6, 0.3, 0.6, 1.0]);
        Self::new(
            big_n,
            3,
            vec![0.5; big_n],
            vec![0.6; big_n],
            vec![mean; big_n],
            vec![cov; big_n],
            vec![Matrix::identity(3, 3); big_n],
            1.0,
            -1.0,
        )
        .expect("example data is consistent")
    }

    /// `E[BᵀB] = Cov(B) + E[B]ᵀE[B]`.
    pub fn second_moment(&self, k: usize) -> Matrix {
        let eb = &self.mean_excess[k];
        &self.cov_excess[k] + eb * eb.transpose()
    }
}

/// Reference values of the three-period example, `k = 0..=3`.
pub mod reference {
    pub const SX: [f64; 4] = [0.0133, 0.0540, 0.2260, 1.0];
    pub const SXY: [f64; 4] = [-0.0230, -0.0777, -0.2712, -1.0];
    pub const SY: [f64; 4] = [0.0397, 0.1119, 0.3254, 1.0];
    /// Gain rows on `x − E[x]`, `k = 0, 1, 2`.
    pub const OX: [[f64; 3]; 3] = [
        [-0.0048, -0.0072, -0.0098],
        [-0.0150, -0.0223, -0.0319],
        [-0.0300, -0.0429, -0.0730],
    ];
    /// Gain rows on `y − E[y]`, `k = 0, 1, 2`.
    pub const OY: [[f64; 3]; 3] = [
        [0.0069, 0.0104, 0.0141],
        [0.0216, 0.0321, 0.0460],
        [0.0359, 0.0515, 0.0876],
    ];
}

/// The general vector-noise problem with `n = 1` and `p = m`: one channel
/// per asset, `D^i = e_iᵀ`, `alpha = Cov(B)`.
pub fn lift_to_multinoise(alm: &AlmProblem) -> MultiNoiseProblemSpec {
    let (big_n, m) = (alm.horizon, alm.asset_count);
    let mut base = BaseProblem::zeros(big_n, 1, m);
    for k in 0..big_n {
        base.a[k] = Matrix::from_element(1, 1, alm.a[k]);
        base.f[k] = Matrix::from_element(1, 1, alm.f[k]);
        base.b[k] = Matrix::from_row_slice(1, alm.asset_count, alm.mean_excess[k].as_slice());
        base.r[k] = alm.r[k].clone();
    }
    base.q[big_n] = Matrix::from_element(1, 1, alm.q_n);
    base.q_bar[big_n] = Matrix::from_element(1, 1, alm.q_bar_n);
    let mut noise = NoiseChannels::zeros(big_n, 1, m, m);
    for k in 0..big_n {
        for i in 0..m {
            let mut row = Matrix::zeros(1, m);
            row[(0, i)] = 1.0;
            noise.d[k][i] = row;
        }
        noise.alpha[k] = alm.cov_excess[k].clone();
    }
    MultiNoiseProblemSpec::new(base, noise).expect("lift preserves dimensions")
}

/// Weight and moment conditions, checked on the lifted problem.
pub fn validate_alm(alm: &AlmProblem) -> ValidationReport {
    validate_problem(&lift_to_multinoise(alm))
}

/// Scalar value sequences (`k = 0..=N`) and step kernels (`k < N`).
/// H rows are `1×m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmRiccati {
    pub sx: Vec<f64>,
    pub tx: Vec<f64>,
    pub sxy: Vec<f64>,
    pub txy: Vec<f64>,
    pub sy: Vec<f64>,
    pub ty: Vec<f64>,
    pub w1: Vec<Matrix>,
    pub w2: Vec<Matrix>,
    pub h1: Vec<Matrix>,
    pub h2: Vec<Matrix>,
    pub h3: Vec<Matrix>,
    pub h4: Vec<Matrix>,
}

impl AlmRiccati {
    pub fn horizon(&self) -> usize {
        self.w1.len()
    }
}

pub fn solve_alm_riccati(alm: &AlmProblem) -> Result<AlmRiccati> {
    let big_n = alm.horizon;
    let m = alm.asset_count;
    let (qn, qt) = (alm.q_n, alm.q_n + alm.q_bar_n);
    let terminal = |v: f64| {
        let mut s = vec![0.0; big_n + 1];
        s[big_n] = v;
        s
    };
    let mut out = AlmRiccati {
        sx: terminal(qn),
        tx: terminal(qt),
        sxy: terminal(-qn),
        txy: terminal(-qt),
        sy: terminal(qn),
        ty: terminal(qt),
        w1: vec![Matrix::zeros(m, m); big_n],
        w2: vec![Matrix::zeros(m, m); big_n],
        h1: vec![Matrix::zeros(1, m); big_n],
        h2: vec![Matrix::zeros(1, m); big_n],
        h3: vec![Matrix::zeros(1, m); big_n],
        h4: vec![Matrix::zeros(1, m); big_n],
    };
    for k in (0..big_n).rev() {
        let (a, f) = (alm.a[k], alm.f[k]);
        let eb = &alm.mean_excess[k];
        let outer = eb * eb.transpose();
        let cov = &alm.cov_excess[k];
        let (sx, tx, sxy, txy, sy, ty) = (
            out.sx[k + 1],
            out.tx[k + 1],
            out.sxy[k + 1],
            out.txy[k + 1],
            out.sy[k + 1],
            out.ty[k + 1],
        );
        let w1 = symmetrize(&(&alm.r[k] + (&outer + cov) * sx));
        let w2 = symmetrize(&(&alm.r[k] + &outer * tx + cov * sx));
        let f1 = SpdFactor::new(&w1, "W1", k)?;
        let f2 = SpdFactor::new(&w2, "W2", k)?;
        // E[B] W⁻¹ E[B]ᵀ
        let g1 = eb.dot(&f1.solve_vec(eb));
        let g2 = eb.dot(&f2.solve_vec(eb));
        out.sx[k] = a * a * sx * (1.0 - sx * g1);
        out.tx[k] = a * a * tx * (1.0 - tx * g2);
        out.sxy[k] = a * f * sxy * (1.0 - sx * g1);
        out.txy[k] = a * f * txy * (1.0 - tx * g2);
        out.sy[k] = f * f * (sy - sxy * sxy * g1);
        out.ty[k] = f * f * (ty - txy * txy * g2);
        let row = Matrix::from_row_slice(1, m, eb.as_slice());
        out.h1[k] = &row * (a * sx);
        out.h2[k] = &row * (a * tx);
        out.h3[k] = &row * (f * sxy);
        out.h4[k] = &row * (f * txy);
        out.w1[k] = w1;
        out.w2[k] = w2;
    }
    Ok(out)
}

/// Gain vectors at one step: `u = ox (x−Ex) + ox_bar Ex + oy (y−Ey) + oy_bar Ey`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmGains {
    pub ox: Vec<f64>,
    pub ox_bar: Vec<f64>,
    pub oy: Vec<f64>,
    pub oy_bar: Vec<f64>,
}

pub fn alm_gains(riccati: &AlmRiccati) -> Result<Vec<AlmGains>> {
    (0..riccati.horizon())
        .map(|k| {
            let f1 = SpdFactor::new(&riccati.w1[k], "W1", k)?;
            let f2 = SpdFactor::new(&riccati.w2[k], "W2", k)?;
            let g = |fac: &SpdFactor, h: &Matrix| -> Vec<f64> {
                (-fac.solve(&h.transpose())).iter().copied().collect()
            };
            Ok(AlmGains {
                ox: g(&f1, &riccati.h1[k]),
                ox_bar: g(&f2, &riccati.h2[k]),
                oy: g(&f1, &riccati.h3[k]),
                oy_bar: g(&f2, &riccati.h4[k]),
            })
        })
        .collect()
}

/// Optimal portfolio at step `k` for wealth `x`, liability `y` and their means.
pub fn alm_strategy(
    alm: &AlmProblem,
    riccati: &AlmRiccati,
    k: usize,
    x: f64,
    ex: f64,
    y: f64,
    ey: f64,
) -> Result<Vector> {
    if k >= riccati.horizon() || riccati.w1[k].nrows() != alm.asset_count {
        return Err(Error::DimensionMismatch(format!(
            "step {k} or asset count does not match the solution"
        )));
    }
    let f1 = SpdFactor::new(&riccati.w1[k], "W1", k)?;
    let f2 = SpdFactor::new(&riccati.w2[k], "W2", k)?;
    let t = |h: &Matrix| h.transpose().column(0).into_owned();
    Ok(-(f1.solve_vec(&t(&riccati.h1[k])) * (x - ex)
        + f2.solve_vec(&t(&riccati.h2[k])) * ex
        + f1.solve_vec(&t(&riccati.h3[k])) * (y - ey)
        + f2.solve_vec(&t(&riccati.h4[k])) * ey))
}

/// `S^x₀Var ζˣ + T^x₀(Eζˣ)² + 2S^{xy}₀Cov(ζˣ,ζʸ) + 2T^{xy}₀EζˣEζʸ + S^y₀Var ζʸ + T^y₀(Eζʸ)²`.
pub fn alm_optimal_value(riccati: &AlmRiccati, init: &InitialMoments) -> f64 {
    let (mx, my) = (init.mean_x[0], init.mean_y[0]);
    riccati.sx[0] * init.cov_x[(0, 0)]
        + riccati.tx[0] * mx * mx
        + 2.0 * riccati.sxy[0] * init.cov_xy[(0, 0)]
        + 2.0 * riccati.txy[0] * mx * my
        + riccati.sy[0] * init.cov_y[(0, 0)]
        + riccati.ty[0] * my * my
}

/// Expected wealth and liability along the optimal strategy, `k = 0..=N`.
pub fn alm_expected_means(alm: &AlmProblem, riccati: &AlmRiccati, ex0: f64, ey0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ex = vec![ex0];
    let mut ey = vec![ey0];
    for k in 0..alm.horizon {
        let eb = &alm.mean_excess[k];
        let f2 = SpdFactor::new(&riccati.w2[k], "W2", k)?;
        let g2 = eb.dot(&f2.solve_vec(eb));
        let nk = alm.a[k] * (1.0 - riccati.tx[k + 1] * g2);
        let mk = -alm.f[k] * riccati.txy[k + 1] * g2;
        ex.push(nk * ex[k] + mk * ey[k]);
        ey.push(alm.f[k] * ey[k]);
    }
    Ok((ex, ey))
}

/// `E[x_N − y_N]`.
pub fn expected_terminal_equity(alm: &AlmProblem, riccati: &AlmRiccati, ex0: f64, ey0: f64) -> Result<f64> {
    let (ex, ey) = alm_expected_means(alm, riccati, ex0, ey0)?;
    Ok(ex[alm.horizon] - ey[alm.horizon])
}

/// Largest relative deviation between the scalar recursion and the general
/// solver applied to the lifted problem, over the six value sequences.
pub fn lift_residual(alm: &AlmProblem) -> Result<f64> {
    let sol = solve_alm_riccati(alm)?;
    let general = crate::riccati::solve_riccati_multinoise(&lift_to_multinoise(alm))?;
    let rel = |a: f64, b: &Matrix| {
        let b = b[(0, 0)];
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    };
    let mut worst = 0.0f64;
    for k in 0..=alm.horizon {
        for (a, b) in [
            (sol.sx[k], &general.sx[k]),
            (sol.tx[k], &general.tx[k]),
            (sol.sxy[k], &general.sxy[k]),
            (sol.txy[k], &general.txy[k]),
            (sol.sy[k], &general.sy[k]),
            (sol.ty[k], &general.ty[k]),
        ] {
            worst = worst.max(rel(a, b));
        }
    }
    Ok(worst)
}

/// Pseudo-inverse of `M + ccᵀ` for PSD `M` and `c ∈ Range(M)`:
/// `M† − M†ccᵀM† / (1 + cᵀM†c)`.
pub fn pinv_rank_one(m: &Matrix, c: &Vector) -> Result<Matrix> {
    if m.nrows() != m.ncols() || c.len() != m.nrows() {
        return Err(Error::DimensionMismatch("pinv_rank_one: M must be square and match c".into()));
    }
    let mp = pinv_symmetric(m, 1e-12);
    let residual = (m * (&mp * c) - c).norm();
    if residual > 1e-10 * c.norm() {
        return Err(Error::RangeViolation { residual });
    }
    let mc = &mp * c;
    let denom = 1.0 + c.dot(&mc);
    Ok(symmetrize(&(&mp - &mc * mc.transpose() / denom)))
}

/// How historical returns map to per-step moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentEstimation {
    /// One mean and covariance from all rows, used at every step.
    #[default]
    Pooled,
    /// Row `t` informs step `t mod N`.
    PerStep,
}

fn sample_moments(rows: &[&[f64]], m: usize) -> (Vector, Matrix) {
    let n = rows.len() as f64;
    let mut mean = Vector::zeros(m);
    for r in rows {
        mean += Vector::from_column_slice(r);
    }
    mean /= n;
    let mut cov = Matrix::zeros(m, m);
    for r in rows {
        let d = Vector::from_column_slice(r) - &mean;
        cov += &d * d.transpose();
    }
    cov /= n - 1.0;
    (mean, symmetrize(&cov))
}

/// Per-step `(E[B_k], Cov(B_k))` from a history of excess returns (one row
/// per period, one column per asset). Covariances use the `n − 1` divisor.
pub fn moments_from_returns(
    returns: &[Vec<f64>],
    horizon: usize,
    mode: MomentEstimation,
) -> Result<(Vec<Vector>, Vec<Matrix>)> {
    let m = returns.first().map_or(0, Vec::len);
    if m == 0 || returns.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidInput("returns must be a non-empty rectangular table".into()));
    }
    if returns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("returns contain non-finite values".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    match mode {
        MomentEstimation::Pooled => {
            if returns.len() < 2 {
                return Err(Error::InvalidInput("need at least 2 return rows".into()));
            }
            let rows: Vec<&[f64]> = returns.iter().map(Vec::as_slice).collect();
            let (mean, cov) = sample_moments(&rows, m);
            Ok((vec![mean; horizon], vec![cov; horizon]))
        }
        MomentEstimation::PerStep => {
            let mut means = Vec::with_capacity(horizon);
            let mut covs = Vec::with_capacity(horizon);
            for k in 0..horizon {
                let rows: Vec<&[f64]> = returns
                    .iter()
                    .skip(k)
                    .step_by(horizon)
                    .map(Vec::as_slice)
                    .collect();
                if rows.len() < 2 {
                    return Err(Error::InvalidInput(format!(
                        "step {k} has fewer than 2 return rows"
                    )));
                }
                let (mean, cov) = sample_moments(&rows, m);
                means.push(mean);
                covs.push(cov);
            }
            Ok((means, covs))
        }
    }
}

/// Builds an ALM problem from return history with constant `a`, `f` and
/// `R = r_scale · I`.
pub fn alm_from_returns(
    returns: &[Vec<f64>],
    horizon: usize,
    mode: MomentEstimation,
    a: f64,
    f: f64,
    r_scale: f64,
    q_n: f64,
    q_bar_n: f64,
) -> Result<AlmProblem> {
    let (means, covs) = moments_from_returns(returns, horizon, mode)?;
    let m = means[0].len();
    if covs.iter().any(|c| !is_psd(c).0) {
        return Err(Error::InvalidInput("estimated covariance is not PSD".into()));
    }
    AlmProblem::new(
        horizon,
        m,
        vec![a; horizon],
        vec![f; horizon],
        means,
        covs,
        vec![Matrix::identity(m, m) * r_scale; horizon],
        q_n,
        q_bar_n,
    )
}
