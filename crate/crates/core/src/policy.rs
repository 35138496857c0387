//! Feedback policies, expected trajectories and closed-form costs.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{check_len, congruence, symmetrize, Matrix, SpdFactor, Vector};
use crate::model::{BaseProblem, InitialMoments, MeanFieldProblem, MultiNoiseProblemSpec};
use crate::riccati::{PFormSolution, RiccatiSolution};

/// Gains at one step; `u = kx (x - Ex) + kx_bar Ex + ky (y - Ey) + ky_bar Ey`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGains {
    pub kx: Matrix,
    pub kx_bar: Matrix,
    pub ky: Matrix,
    pub ky_bar: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPolicy {
    pub gains: Vec<StepGains>,
}

impl FeedbackPolicy {
    pub fn horizon(&self) -> usize {
        self.gains.len()
    }

    pub fn control_dim(&self) -> usize {
        self.gains.first().map_or(0, |g| g.kx.nrows())
    }

    pub fn state_dim(&self) -> usize {
        self.gains.first().map_or(0, |g| g.kx.ncols())
    }

    /// All-zero gains.
    pub fn zeros(horizon: usize, state_dim: usize, control_dim: usize) -> Self {
        let z = Matrix::zeros(control_dim, state_dim);
        Self {
            gains: vec![
                StepGains {
                    kx: z.clone(),
                    kx_bar: z.clone(),
                    ky: z.clone(),
                    ky_bar: z,
                };
                horizon
            ],
        }
    }

    /// Centered gains from the minimum-principle form:
    /// `K = L`, `K̄ = L + L̄`.
    pub fn from_p_form(p: &PFormSolution) -> Self {
        let gains = (0..p.horizon())
            .map(|k| StepGains {
                kx: p.lxo[k].clone(),
                kx_bar: &p.lxo[k] + &p.lxo_bar[k],
                ky: p.lyo[k].clone(),
                ky_bar: &p.lyo[k] + &p.lyo_bar[k],
            })
            .collect();
        Self { gains }
    }
}

/// `K^x = −W1⁻¹H1ᵀ`, `K̄^x = −W2⁻¹H2ᵀ`, `K^y = −W1⁻¹H3ᵀ`, `K̄^y = −W2⁻¹H4ᵀ`.
pub fn build_policy(riccati: &RiccatiSolution) -> Result<FeedbackPolicy> {
    let mut gains = Vec::with_capacity(riccati.horizon());
    for k in 0..riccati.horizon() {
        let f1 = SpdFactor::new(&riccati.w1[k], "W1", k)?;
        let f2 = SpdFactor::new(&riccati.w2[k], "W2", k)?;
        gains.push(StepGains {
            kx: -f1.solve(&riccati.h1[k].transpose()),
            kx_bar: -f2.solve(&riccati.h2[k].transpose()),
            ky: -f1.solve(&riccati.h3[k].transpose()),
            ky_bar: -f2.solve(&riccati.h4[k].transpose()),
        });
    }
    Ok(FeedbackPolicy { gains })
}

pub fn control_action(
    policy: &FeedbackPolicy,
    k: usize,
    x: &Vector,
    ex: &Vector,
    y: &Vector,
    ey: &Vector,
) -> Result<Vector> {
    if k >= policy.horizon() {
        return Err(crate::error::Error::InvalidInput(format!(
            "step {k} outside 0..{}",
            policy.horizon()
        )));
    }
    let n = policy.state_dim();
    check_len(x, n, "x")?;
    check_len(ex, n, "Ex")?;
    check_len(y, n, "y")?;
    check_len(ey, n, "Ey")?;
    Ok(control_unchecked(&policy.gains[k], x, ex, y, ey))
}

pub(crate) fn control_unchecked(
    g: &StepGains,
    x: &Vector,
    ex: &Vector,
    y: &Vector,
    ey: &Vector,
) -> Vector {
    &g.kx * (x - ex) + &g.kx_bar * ex + &g.ky * (y - ey) + &g.ky_bar * ey
}

/// Means of the closed-loop system and the transition factors
/// `E[x_{k+1}] = N_k E[x_k] + M_k E[y_k]`, `E[y_{k+1}] = O_k E[y_k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedTrajectory {
    #[serde(serialize_with = "ser_vecs")]
    pub ex: Vec<Vector>,
    #[serde(serialize_with = "ser_vecs")]
    pub ey: Vec<Vector>,
    #[serde(serialize_with = "ser_vecs")]
    pub eu: Vec<Vector>,
    #[serde(skip)]
    pub n_k: Vec<Matrix>,
    #[serde(skip)]
    pub m_k: Vec<Matrix>,
    #[serde(skip)]
    pub o_k: Vec<Matrix>,
}

fn ser_vecs<S: serde::Serializer>(v: &[Vector], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(x.as_slice())?;
    }
    seq.end()
}

/// Forward recursion of the means under the optimal policy from `riccati`.
pub fn expected_trajectory<P: MeanFieldProblem + ?Sized>(
    spec: &P,
    riccati: &RiccatiSolution,
    ex0: &Vector,
    ey0: &Vector,
) -> Result<ExpectedTrajectory> {
    let policy = build_policy(riccati)?;
    policy_expected_trajectory(spec.base(), &policy, ex0, ey0)
}

/// Forward recursion of the means under an arbitrary centered-form policy.
pub fn policy_expected_trajectory(
    base: &BaseProblem,
    policy: &FeedbackPolicy,
    ex0: &Vector,
    ey0: &Vector,
) -> Result<ExpectedTrajectory> {
    let n = base.state_dim;
    check_len(ex0, n, "E[x_0]")?;
    check_len(ey0, n, "E[y_0]")?;
    let big_n = base.horizon;
    let mut out = ExpectedTrajectory {
        ex: vec![ex0.clone()],
        ey: vec![ey0.clone()],
        eu: Vec::with_capacity(big_n),
        n_k: Vec::with_capacity(big_n),
        m_k: Vec::with_capacity(big_n),
        o_k: Vec::with_capacity(big_n),
    };
    for k in 0..big_n {
        let g = &policy.gains[k];
        let b2 = &base.b[k] + &base.b_bar[k];
        let nk = &base.a[k] + &base.a_bar[k] + &b2 * &g.kx_bar;
        let mk = &b2 * &g.ky_bar;
        let ok = &base.f[k] + &base.f_bar[k];
        let (ex, ey) = (&out.ex[k], &out.ey[k]);
        let eu = &g.kx_bar * ex + &g.ky_bar * ey;
        let ex_next = &nk * ex + &mk * ey;
        let ey_next = &ok * ey;
        out.eu.push(eu);
        out.ex.push(ex_next);
        out.ey.push(ey_next);
        out.n_k.push(nk);
        out.m_k.push(mk);
        out.o_k.push(ok);
    }
    Ok(out)
}

/// Optimal cost from the step-0 value matrices:
/// `tr(S^x Σx) + μxᵀT^xμx + 2 tr(S^{xy} Σxy) + 2 μyᵀT^{xy}μx + tr(S^y Σy) + μyᵀT^yμy`
/// with `Σxy = E[x̃ ỹᵀ]`.
pub fn optimal_cost(riccati: &RiccatiSolution, init: &InitialMoments) -> f64 {
    value_at(
        &riccati.sx[0],
        &riccati.tx[0],
        &riccati.sxy[0],
        &riccati.txy[0],
        &riccati.sy[0],
        &riccati.ty[0],
        init,
    )
}

pub(crate) fn value_at(
    sx: &Matrix,
    tx: &Matrix,
    sxy: &Matrix,
    txy: &Matrix,
    sy: &Matrix,
    ty: &Matrix,
    init: &InitialMoments,
) -> f64 {
    let (mx, my) = (&init.mean_x, &init.mean_y);
    (sx * &init.cov_x).trace()
        + mx.dot(&(tx * mx))
        + 2.0 * (sxy * &init.cov_xy).trace()
        + 2.0 * my.dot(&(txy * mx))
        + (sy * &init.cov_y).trace()
        + my.dot(&(ty * my))
}

/// Exact cost of an arbitrary centered-form linear policy, by a backward
/// Lyapunov recursion on the stacked state `(x, y)` split into centered and
/// mean parts.
pub fn policy_cost(
    spec: &MultiNoiseProblemSpec,
    policy: &FeedbackPolicy,
    init: &InitialMoments,
) -> f64 {
    let base = &spec.base;
    let noise = &spec.noise;
    let (n, big_n, p) = (base.state_dim, base.horizon, noise.noise_dim);
    let stack = |q: &Matrix| {
        let mut out = Matrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(q);
        out.view_mut((n, n), (n, n)).copy_from(q);
        out.view_mut((0, n), (n, n)).copy_from(&-q);
        out.view_mut((n, 0), (n, n)).copy_from(&-q);
        out
    };
    let hcat = |l: &Matrix, r: &Matrix| {
        let mut out = Matrix::zeros(l.nrows(), 2 * n);
        out.view_mut((0, 0), (l.nrows(), n)).copy_from(l);
        out.view_mut((0, n), (l.nrows(), n)).copy_from(r);
        out
    };
    let block = |tl: &Matrix, tr: &Matrix, br: &Matrix| {
        let mut out = Matrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(tl);
        out.view_mut((0, n), (n, n)).copy_from(tr);
        out.view_mut((n, n), (n, n)).copy_from(br);
        out
    };
    let zn = Matrix::zeros(n, n);

    let mut pi = stack(&base.q[big_n]);
    let mut lam = stack(&(&base.q[big_n] + &base.q_bar[big_n]));
    for k in (0..big_n).rev() {
        let g = &policy.gains[k];
        let (a, b, f) = (&base.a[k], &base.b[k], &base.f[k]);
        let a2 = a + &base.a_bar[k];
        let b2 = b + &base.b_bar[k];
        let f2 = f + &base.f_bar[k];
        let kc = hcat(&g.kx, &g.ky);
        let km = hcat(&g.kx_bar, &g.ky_bar);
        let phi = block(&(a + b * &g.kx), &(b * &g.ky), f);
        let psi = block(&(&a2 + &b2 * &g.kx_bar), &(&b2 * &g.ky_bar), &f2);

        // per-channel noise loadings on the centered and mean parts
        let mut mx = Vec::with_capacity(p);
        let mut nx = Vec::with_capacity(p);
        let mut my = Vec::with_capacity(p);
        let mut ny = Vec::with_capacity(p);
        for i in 0..p {
            let (c, d, gg) = (&noise.c[k][i], &noise.d[k][i], &noise.g[k][i]);
            let c2 = c + &noise.c_bar[k][i];
            let d2 = d + &noise.d_bar[k][i];
            let g2 = gg + &noise.g_bar[k][i];
            mx.push(hcat(&(c + d * &g.kx), &(d * &g.ky)));
            nx.push(hcat(&(&c2 + &d2 * &g.kx_bar), &(&d2 * &g.ky_bar)));
            my.push(hcat(&zn, gg));
            ny.push(hcat(&zn, &g2));
        }
        let pxx = pi.view((0, 0), (n, n)).into_owned();
        let pxy = pi.view((0, n), (n, n)).into_owned();
        let pyy = pi.view((n, n), (n, n)).into_owned();
        let noise_form = |lx: &[Matrix], ly: &[Matrix]| {
            let mut out = Matrix::zeros(2 * n, 2 * n);
            for i in 0..p {
                for j in 0..p {
                    let al = noise.alpha[k][(i, j)];
                    let be = noise.beta[k][(i, j)];
                    let ga = noise.gamma[k][(i, j)];
                    if al != 0.0 {
                        out += lx[i].transpose() * &pxx * &lx[j] * al;
                    }
                    if be != 0.0 {
                        out += ly[i].transpose() * &pyy * &ly[j] * be;
                    }
                    if ga != 0.0 {
                        let t = lx[i].transpose() * &pxy * &ly[j] * ga;
                        out += &t + t.transpose();
                    }
                }
            }
            out
        };
        let new_pi = stack(&base.q[k])
            + congruence(&kc, &base.r[k])
            + congruence(&phi, &pi)
            + noise_form(&mx, &my);
        let new_lam = stack(&(&base.q[k] + &base.q_bar[k]))
            + congruence(&km, &(&base.r[k] + &base.r_bar[k]))
            + congruence(&psi, &lam)
            + noise_form(&nx, &ny);
        pi = symmetrize(&new_pi);
        lam = symmetrize(&new_lam);
    }
    let mut mean = Vector::zeros(2 * n);
    mean.rows_mut(0, n).copy_from(&init.mean_x);
    mean.rows_mut(n, n).copy_from(&init.mean_y);
    (&pi * init.joint_covariance()).trace() + mean.dot(&(&lam * &mean))
}
