//! Backward Riccati recursions.
//!
//! The value function at step `k` is
//!
//! ```text
//! E[x̃ᵀS^x x̃] + E[x]ᵀT^x E[x] + 2 E[ỹᵀS^{xy} x̃] + 2 E[y]ᵀT^{xy} E[x]
//!   + E[ỹᵀS^y ỹ] + E[y]ᵀT^y E[y],     x̃ = x - E[x], ỹ = y - E[y].
//! ```
//!
//! Two parameterizations are provided: the S/T form ([`solve_riccati`],
//! [`solve_riccati_multinoise`]) and the multiplier form with explicit gains
//! ([`solve_p_form`]), where `P` plays the role of `S` and `P + P̄` that of `T`.

use crate::error::{Error, Result};
use crate::linalg::{bilinear, congruence, is_psd, symmetrize, Matrix, SpdFactor};
use crate::model::{BaseProblem, MultiNoiseProblemSpec, ProblemSpec};

/// The six value sequences (`k = 0..=N`) and the step kernels (`k < N`).
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub sx: Vec<Matrix>,
    pub tx: Vec<Matrix>,
    pub sxy: Vec<Matrix>,
    pub txy: Vec<Matrix>,
    pub sy: Vec<Matrix>,
    pub ty: Vec<Matrix>,
    pub w1: Vec<Matrix>,
    pub w2: Vec<Matrix>,
    pub h1: Vec<Matrix>,
    pub h2: Vec<Matrix>,
    pub h3: Vec<Matrix>,
    pub h4: Vec<Matrix>,
}

impl RiccatiSolution {
    pub fn horizon(&self) -> usize {
        self.w1.len()
    }

    fn with_terminal(base: &BaseProblem) -> Self {
        let big_n = base.horizon;
        let qn = base.q[big_n].clone();
        let qt = &qn + &base.q_bar[big_n];
        let sized = |m: Matrix| {
            let mut v = vec![Matrix::zeros(m.nrows(), m.ncols()); big_n + 1];
            v[big_n] = m;
            v
        };
        let steps = |r: usize, c: usize| vec![Matrix::zeros(r, c); big_n];
        let (n, m) = (base.state_dim, base.control_dim);
        Self {
            sx: sized(qn.clone()),
            tx: sized(qt.clone()),
            sxy: sized(-&qn),
            txy: sized(-&qt),
            sy: sized(qn),
            ty: sized(qt),
            w1: steps(m, m),
            w2: steps(m, m),
            h1: steps(n, m),
            h2: steps(n, m),
            h3: steps(n, m),
            h4: steps(n, m),
        }
    }
}

/// Noise contributions at one step, evaluated against the step-(k+1) value
/// matrices. Suffix `1` pairs with the centered part (`S`), suffix `2` with the
/// mean part (coefficients `C + C̄` etc.).
struct NoiseTerms {
    dd1: Matrix,
    dd2: Matrix,
    cd1: Matrix,
    cd2: Matrix,
    gd1: Matrix,
    gd2: Matrix,
    cc1: Matrix,
    cc2: Matrix,
    gc1: Matrix,
    gc2: Matrix,
    gg1: Matrix,
    gg2: Matrix,
}

/// Value matrices at step `k+1` as seen by the step-`k` kernels.
struct NextValues<'a> {
    sx: &'a Matrix,
    tx: &'a Matrix,
    sxy: &'a Matrix,
    txy: &'a Matrix,
    sy: &'a Matrix,
    ty: &'a Matrix,
}

fn scalar_noise_terms(spec: &ProblemSpec, k: usize, v: &NextValues) -> NoiseTerms {
    let s = &spec.noise;
    let rho = s.rho;
    let (c, d, g) = (&s.c[k], &s.d[k], &s.g[k]);
    let c2 = c + &s.c_bar[k];
    let d2 = d + &s.d_bar[k];
    let g2 = g + &s.g_bar[k];
    NoiseTerms {
        dd1: congruence(d, v.sx),
        dd2: congruence(&d2, v.sx),
        cd1: bilinear(c, v.sx, d),
        cd2: bilinear(&c2, v.sx, &d2),
        gd1: bilinear(g, v.sxy, d) * rho,
        gd2: bilinear(&g2, v.sxy, &d2) * rho,
        cc1: congruence(c, v.sx),
        cc2: congruence(&c2, v.sx),
        gc1: bilinear(g, v.sxy, c) * rho,
        gc2: bilinear(&g2, v.sxy, &c2) * rho,
        gg1: congruence(g, v.sy),
        gg2: congruence(&g2, v.sy),
    }
}

/// `Σ_{i,j} w_{ij} Lᵢᵀ M Rⱼ`.
fn channel_sum(weights: &Matrix, left: &[Matrix], mid: &Matrix, right: &[Matrix]) -> Matrix {
    let mr: Vec<Matrix> = right.iter().map(|r| mid * r).collect();
    let mut out = Matrix::zeros(left[0].ncols(), right[0].ncols());
    for (i, l) in left.iter().enumerate() {
        let lt = l.transpose();
        for (j, mrj) in mr.iter().enumerate() {
            let w = weights[(i, j)];
            if w != 0.0 {
                out += (&lt * mrj) * w;
            }
        }
    }
    out
}

fn summed(a: &[Matrix], b: &[Matrix]) -> Vec<Matrix> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn multi_noise_terms(spec: &MultiNoiseProblemSpec, k: usize, v: &NextValues) -> NoiseTerms {
    let s = &spec.noise;
    let (alpha, beta) = (&s.alpha[k], &s.beta[k]);
    // E[v^i w^j] = gamma_{ji}
    let gamma_t = s.gamma[k].transpose();
    let (c, d, g) = (&s.c[k], &s.d[k], &s.g[k]);
    let c2 = summed(c, &s.c_bar[k]);
    let d2 = summed(d, &s.d_bar[k]);
    let g2 = summed(g, &s.g_bar[k]);
    NoiseTerms {
        dd1: channel_sum(alpha, d, v.sx, d),
        dd2: channel_sum(alpha, &d2, v.sx, &d2),
        cd1: channel_sum(alpha, c, v.sx, d),
        cd2: channel_sum(alpha, &c2, v.sx, &d2),
        gd1: channel_sum(&gamma_t, g, v.sxy, d),
        gd2: channel_sum(&gamma_t, &g2, v.sxy, &d2),
        cc1: channel_sum(alpha, c, v.sx, c),
        cc2: channel_sum(alpha, &c2, v.sx, &c2),
        gc1: channel_sum(&gamma_t, g, v.sxy, c),
        gc2: channel_sum(&gamma_t, &g2, v.sxy, &c2),
        gg1: channel_sum(beta, g, v.sy, g),
        gg2: channel_sum(beta, &g2, v.sy, &g2),
    }
}

/// W and H kernels at step `k` (before factorization).
struct Kernels {
    w1: Matrix,
    w2: Matrix,
    h1: Matrix,
    h2: Matrix,
    h3: Matrix,
    h4: Matrix,
}

fn kernels(base: &BaseProblem, k: usize, v: &NextValues, nt: &NoiseTerms) -> Kernels {
    let (a, b, f) = (&base.a[k], &base.b[k], &base.f[k]);
    let a2 = a + &base.a_bar[k];
    let b2 = b + &base.b_bar[k];
    let f2 = f + &base.f_bar[k];
    let r2 = &base.r[k] + &base.r_bar[k];
    Kernels {
        w1: symmetrize(&(&base.r[k] + congruence(b, v.sx) + &nt.dd1)),
        w2: symmetrize(&(r2 + congruence(&b2, v.tx) + &nt.dd2)),
        h1: bilinear(a, v.sx, b) + &nt.cd1,
        h2: bilinear(&a2, v.tx, &b2) + &nt.cd2,
        h3: bilinear(f, v.sxy, b) + &nt.gd1,
        h4: bilinear(&f2, v.txy, &b2) + &nt.gd2,
    }
}

/// Drift-only parts of the six value updates (everything except the
/// `-H W⁻¹ Hᵀ` corrections).
struct Drift {
    sx: Matrix,
    tx: Matrix,
    sxy: Matrix,
    txy: Matrix,
    sy: Matrix,
    ty: Matrix,
}

fn drift(base: &BaseProblem, k: usize, v: &NextValues, nt: &NoiseTerms) -> Drift {
    let (a, f) = (&base.a[k], &base.f[k]);
    let a2 = a + &base.a_bar[k];
    let f2 = f + &base.f_bar[k];
    let q = &base.q[k];
    let qt = q + &base.q_bar[k];
    Drift {
        sx: q + congruence(a, v.sx) + &nt.cc1,
        tx: &qt + congruence(&a2, v.tx) + &nt.cc2,
        sxy: -q + bilinear(f, v.sxy, a) + &nt.gc1,
        txy: -&qt + bilinear(&f2, v.txy, &a2) + &nt.gc2,
        sy: q + congruence(f, v.sy) + &nt.gg1,
        ty: qt + congruence(&f2, v.ty) + &nt.gg2,
    }
}

fn backward<F>(base: &BaseProblem, mut noise: F) -> Result<RiccatiSolution>
where
    F: FnMut(usize, &NextValues) -> NoiseTerms,
{
    let mut sol = RiccatiSolution::with_terminal(base);
    for k in (0..base.horizon).rev() {
        let v = NextValues {
            sx: &sol.sx[k + 1],
            tx: &sol.tx[k + 1],
            sxy: &sol.sxy[k + 1],
            txy: &sol.txy[k + 1],
            sy: &sol.sy[k + 1],
            ty: &sol.ty[k + 1],
        };
        let nt = noise(k, &v);
        let ker = kernels(base, k, &v, &nt);
        let dr = drift(base, k, &v, &nt);
        let f1 = SpdFactor::new(&ker.w1, "W1", k)?;
        let f2 = SpdFactor::new(&ker.w2, "W2", k)?;
        // W⁻¹Hᵀ, m×n
        let g1 = f1.solve(&ker.h1.transpose());
        let g2 = f2.solve(&ker.h2.transpose());
        let g3 = f1.solve(&ker.h3.transpose());
        let g4 = f2.solve(&ker.h4.transpose());
        sol.sx[k] = symmetrize(&(dr.sx - &ker.h1 * &g1));
        sol.tx[k] = symmetrize(&(dr.tx - &ker.h2 * &g2));
        sol.sxy[k] = dr.sxy - &ker.h3 * &g1;
        sol.txy[k] = dr.txy - &ker.h4 * &g2;
        sol.sy[k] = symmetrize(&(dr.sy - &ker.h3 * &g3));
        sol.ty[k] = symmetrize(&(dr.ty - &ker.h4 * &g4));
        sol.w1[k] = ker.w1;
        sol.w2[k] = ker.w2;
        sol.h1[k] = ker.h1;
        sol.h2[k] = ker.h2;
        sol.h3[k] = ker.h3;
        sol.h4[k] = ker.h4;
    }
    Ok(sol)
}

/// S/T recursion for scalar noise with correlation `rho`.
pub fn solve_riccati(spec: &ProblemSpec) -> Result<RiccatiSolution> {
    backward(&spec.base, |k, v| scalar_noise_terms(spec, k, v))
}

/// S/T recursion for vector noise. The moments `alpha[k]`, `beta[k]`,
/// `gamma[k]` enter the step-`k` update.
pub fn solve_riccati_multinoise(spec: &MultiNoiseProblemSpec) -> Result<RiccatiSolution> {
    for k in 0..spec.base.horizon {
        if !is_psd(&spec.noise.joint_moment(k)).0 {
            return Err(Error::InvalidMoment { k });
        }
    }
    backward(&spec.base, |k, v| multi_noise_terms(spec, k, v))
}

/// Terminal value of `P̄^{xy}_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PxyBoundary {
    /// `P̄^{xy}_N = −Q̄_N`, so that `P^{xy}_N + P̄^{xy}_N = −Q_N − Q̄_N`.
    #[default]
    Consistent,
    /// `P̄^{xy}_N = −Q_N`. Kept to demonstrate that it breaks the
    /// equivalence with the S/T form whenever `Q̄_N ≠ Q_N`.
    NegQ,
}

/// Multiplier sequences and gains of the minimum-principle form.
///
/// The control is `u = L^{xo} x + L̄^{xo} E[x] + L^{yo} y + L̄^{yo} E[y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PFormSolution {
    pub px: Vec<Matrix>,
    pub px_bar: Vec<Matrix>,
    pub pxy: Vec<Matrix>,
    pub pxy_bar: Vec<Matrix>,
    pub py: Vec<Matrix>,
    pub py_bar: Vec<Matrix>,
    pub lxo: Vec<Matrix>,
    pub lxo_bar: Vec<Matrix>,
    pub lyo: Vec<Matrix>,
    pub lyo_bar: Vec<Matrix>,
    pub w1: Vec<Matrix>,
    pub w2: Vec<Matrix>,
    pub h1: Vec<Matrix>,
    pub h2: Vec<Matrix>,
    pub h3: Vec<Matrix>,
    pub h4: Vec<Matrix>,
}

impl PFormSolution {
    pub fn horizon(&self) -> usize {
        self.lxo.len()
    }
}

pub fn solve_p_form(spec: &ProblemSpec) -> Result<PFormSolution> {
    solve_p_form_with(spec, PxyBoundary::Consistent)
}

/// `X + Xᵀ` for the cross terms `LᵀH̄ᵀ + H̄L` of a completed square.
fn cross(l_left: &Matrix, h_left: &Matrix, l_right: &Matrix, h_right: &Matrix) -> Matrix {
    l_left.transpose() * h_right.transpose() + h_left * l_right
}

pub fn solve_p_form_with(spec: &ProblemSpec, boundary: PxyBoundary) -> Result<PFormSolution> {
    let base = &spec.base;
    let big_n = base.horizon;
    let (n, m) = (base.state_dim, base.control_dim);
    let qn = &base.q[big_n];
    let qbn = &base.q_bar[big_n];
    let seq = |r: usize, c: usize, len: usize| vec![Matrix::zeros(r, c); len];

    // running sums P + P̄ are kept alongside P
    let mut px = seq(n, n, big_n + 1);
    let mut pxs = seq(n, n, big_n + 1);
    let mut pxy = seq(n, n, big_n + 1);
    let mut pxys = seq(n, n, big_n + 1);
    let mut py = seq(n, n, big_n + 1);
    let mut pys = seq(n, n, big_n + 1);
    px[big_n] = qn.clone();
    pxs[big_n] = qn + qbn;
    pxy[big_n] = -qn;
    pxys[big_n] = match boundary {
        PxyBoundary::Consistent => -(qn + qbn),
        PxyBoundary::NegQ => -(qn + qn),
    };
    py[big_n] = qn.clone();
    pys[big_n] = qn + qbn;

    let mut out = PFormSolution {
        px: Vec::new(),
        px_bar: Vec::new(),
        pxy: Vec::new(),
        pxy_bar: Vec::new(),
        py: Vec::new(),
        py_bar: Vec::new(),
        lxo: seq(m, n, big_n),
        lxo_bar: seq(m, n, big_n),
        lyo: seq(m, n, big_n),
        lyo_bar: seq(m, n, big_n),
        w1: seq(m, m, big_n),
        w2: seq(m, m, big_n),
        h1: seq(n, m, big_n),
        h2: seq(n, m, big_n),
        h3: seq(n, m, big_n),
        h4: seq(n, m, big_n),
    };

    for k in (0..big_n).rev() {
        let v = NextValues {
            sx: &px[k + 1],
            tx: &pxs[k + 1],
            sxy: &pxy[k + 1],
            txy: &pxys[k + 1],
            sy: &py[k + 1],
            ty: &pys[k + 1],
        };
        let nt = scalar_noise_terms(spec, k, &v);
        let ker = kernels(base, k, &v, &nt);
        let dr = drift(base, k, &v, &nt);
        let f1 = SpdFactor::new(&ker.w1, "W1", k)?;
        let f2 = SpdFactor::new(&ker.w2, "W2", k)?;

        let lx = -f1.solve(&ker.h1.transpose());
        let lx_sum = -f2.solve(&ker.h2.transpose());
        let ly = -f1.solve(&ker.h3.transpose());
        let ly_sum = -f2.solve(&ker.h4.transpose());

        let new_px = dr.sx + congruence(&lx, &ker.w1) + cross(&lx, &ker.h1, &lx, &ker.h1);
        let new_pxs =
            dr.tx + congruence(&lx_sum, &ker.w2) + cross(&lx_sum, &ker.h2, &lx_sum, &ker.h2);
        let new_pxy = dr.sxy + bilinear(&ly, &ker.w1, &lx) + cross(&ly, &ker.h3, &lx, &ker.h1);
        let new_pxys = dr.txy
            + bilinear(&ly_sum, &ker.w2, &lx_sum)
            + cross(&ly_sum, &ker.h4, &lx_sum, &ker.h2);
        let new_py = dr.sy + congruence(&ly, &ker.w1) + cross(&ly, &ker.h3, &ly, &ker.h3);
        let new_pys =
            dr.ty + congruence(&ly_sum, &ker.w2) + cross(&ly_sum, &ker.h4, &ly_sum, &ker.h4);

        px[k] = symmetrize(&new_px);
        pxs[k] = symmetrize(&new_pxs);
        pxy[k] = new_pxy;
        pxys[k] = new_pxys;
        py[k] = symmetrize(&new_py);
        pys[k] = symmetrize(&new_pys);

        out.lxo_bar[k] = &lx_sum - &lx;
        out.lyo_bar[k] = &ly_sum - &ly;
        out.lxo[k] = lx;
        out.lyo[k] = ly;
        out.w1[k] = ker.w1;
        out.w2[k] = ker.w2;
        out.h1[k] = ker.h1;
        out.h2[k] = ker.h2;
        out.h3[k] = ker.h3;
        out.h4[k] = ker.h4;
    }

    let bar = |p: &[Matrix], s: &[Matrix]| -> Vec<Matrix> {
        p.iter().zip(s).map(|(p, s)| s - p).collect()
    };
    out.px_bar = bar(&px, &pxs);
    out.pxy_bar = bar(&pxy, &pxys);
    out.py_bar = bar(&py, &pys);
    out.px = px;
    out.pxy = pxy;
    out.py = py;
    Ok(out)
}

/// Largest relative deviation between matched P-form and S/T sequences over
/// all six pairings: `P^x ~ S^x`, `P^x + P̄^x ~ T^x`, and likewise for the
/// cross and liability sequences.
pub fn equivalence_residual(p: &PFormSolution, s: &RiccatiSolution) -> f64 {
    use crate::linalg::rel_diff;
    let mut worst = 0.0f64;
    for k in 0..p.px.len() {
        let pairs = [
            (p.px[k].clone(), &s.sx[k]),
            (&p.px[k] + &p.px_bar[k], &s.tx[k]),
            (p.pxy[k].clone(), &s.sxy[k]),
            (&p.pxy[k] + &p.pxy_bar[k], &s.txy[k]),
            (p.py[k].clone(), &s.sy[k]),
            (&p.py[k] + &p.py_bar[k], &s.ty[k]),
        ];
        for (a, b) in pairs.iter() {
            worst = worst.max(rel_diff(a, b));
        }
    }
    worst
}

/// Largest relative deviation between two S/T solutions over all twelve
/// sequences.
pub fn solution_deviation(a: &RiccatiSolution, b: &RiccatiSolution) -> f64 {
    use crate::linalg::rel_diff;
    let seqs = [
        (&a.sx, &b.sx),
        (&a.tx, &b.tx),
        (&a.sxy, &b.sxy),
        (&a.txy, &b.txy),
        (&a.sy, &b.sy),
        (&a.ty, &b.ty),
        (&a.w1, &b.w1),
        (&a.w2, &b.w2),
        (&a.h1, &b.h1),
        (&a.h2, &b.h2),
        (&a.h3, &b.h3),
        (&a.h4, &b.h4),
    ];
    seqs.iter()
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| rel_diff(p, q)))
        .fold(0.0, f64::max)
}
