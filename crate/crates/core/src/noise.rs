//! Noise laws: samplers for simulation and finite-support laws for the
//! scenario-tree oracle.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_psd, psd_sqrt, Matrix, Vector};
use crate::model::{InitialMoments, MultiNoiseProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Gaussian,
    Rademacher,
}

impl std::str::FromStr for SamplerKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            other => Err(format!("unknown sampler '{other}'")),
        }
    }
}

/// Per-step second moments of `(w_k, v_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLaw {
    pub alpha: Vec<Matrix>,
    pub beta: Vec<Matrix>,
    pub gamma: Vec<Matrix>,
}

impl NoiseLaw {
    /// Unit variances and correlation `rho` over `horizon` steps.
    pub fn scalar(rho: f64, horizon: usize) -> Self {
        let one = Matrix::from_element(1, 1, 1.0);
        Self {
            alpha: vec![one.clone(); horizon],
            beta: vec![one; horizon],
            gamma: vec![Matrix::from_element(1, 1, rho); horizon],
        }
    }

    pub fn from_problem(spec: &MultiNoiseProblemSpec) -> Self {
        Self {
            alpha: spec.noise.alpha.clone(),
            beta: spec.noise.beta.clone(),
            gamma: spec.noise.gamma.clone(),
        }
    }

    pub fn noise_dim(&self) -> usize {
        self.alpha.first().map_or(0, Matrix::nrows)
    }

    pub fn horizon(&self) -> usize {
        self.alpha.len()
    }

    pub fn joint(&self, k: usize) -> Matrix {
        let p = self.noise_dim();
        let mut out = Matrix::zeros(2 * p, 2 * p);
        out.view_mut((0, 0), (p, p)).copy_from(&self.alpha[k]);
        out.view_mut((0, p), (p, p)).copy_from(&self.gamma[k]);
        out.view_mut((p, 0), (p, p)).copy_from(&self.gamma[k].transpose());
        out.view_mut((p, p), (p, p)).copy_from(&self.beta[k]);
        out
    }
}

/// How one step's `(w, v)` is drawn.
#[derive(Debug, Clone)]
enum StepDraw {
    /// `(w, v) = L ε` with `L Lᵀ` the joint second moment.
    Linear(Matrix),
    /// `w = sw·s₁`, `v = sv·s₂` with signs `P(s₁ = s₂) = (1 + c)/2`.
    FourPoint { sw: f64, sv: f64, c: f64 },
}

/// Draws `(w_k, v_k)` with the prescribed second moments.
///
/// Gaussian: jointly normal. Rademacher: for one channel with positive
/// variances, the exact four-point sign law; otherwise `L ε` with Rademacher
/// `ε`, which matches the first two moments.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    pub kind: SamplerKind,
    pub seed: u64,
    law: NoiseLaw,
    draws: Vec<StepDraw>,
}

impl NoiseSampler {
    pub fn new(kind: SamplerKind, law: NoiseLaw, seed: u64) -> Result<Self> {
        let p = law.noise_dim();
        let mut draws = Vec::with_capacity(law.horizon());
        for k in 0..law.horizon() {
            let joint = law.joint(k);
            if !is_psd(&joint).0 {
                return Err(Error::InvalidMoment { k });
            }
            let (al, be, ga) = (law.alpha[k][(0, 0)], law.beta[k][(0, 0)], law.gamma[k][(0, 0)]);
            let draw = if kind == SamplerKind::Rademacher && p == 1 && al > 0.0 && be > 0.0 {
                let (sw, sv) = (al.sqrt(), be.sqrt());
                StepDraw::FourPoint {
                    sw,
                    sv,
                    c: (ga / (sw * sv)).clamp(-1.0, 1.0),
                }
            } else {
                StepDraw::Linear(psd_sqrt(&joint))
            };
            draws.push(draw);
        }
        Ok(Self {
            kind,
            seed,
            law,
            draws,
        })
    }

    pub fn law(&self) -> &NoiseLaw {
        &self.law
    }

    pub fn noise_dim(&self) -> usize {
        self.law.noise_dim()
    }

    /// One draw of `(w_k, v_k)`.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> (Vector, Vector) {
        let p = self.noise_dim();
        match &self.draws[k] {
            StepDraw::FourPoint { sw, sv, c } => {
                let s1 = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let same = rng.random::<f64>() < (1.0 + c) / 2.0;
                let s2 = if same { s1 } else { -s1 };
                (Vector::from_element(1, sw * s1), Vector::from_element(1, sv * s2))
            }
            StepDraw::Linear(l) => {
                let eps = standard_vector(self.kind, 2 * p, rng);
                let z = l * eps;
                (z.rows(0, p).into_owned(), z.rows(p, p).into_owned())
            }
        }
    }
}

fn standard_vector<R: Rng + ?Sized>(kind: SamplerKind, len: usize, rng: &mut R) -> Vector {
    match kind {
        SamplerKind::Gaussian => Vector::from_fn(len, |_, _| rng.sample(StandardNormal)),
        SamplerKind::Rademacher => Vector::from_fn(len, |_, _| {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }),
    }
}

/// Draws `(ζˣ, ζʸ)` as `μ + L ε` with `L Lᵀ` the joint covariance.
#[derive(Debug, Clone)]
pub struct InitSampler {
    pub kind: SamplerKind,
    pub moments: InitialMoments,
    factor: Matrix,
}

impl InitSampler {
    pub fn new(kind: SamplerKind, moments: InitialMoments) -> Self {
        let factor = psd_sqrt(&moments.joint_covariance());
        Self {
            kind,
            moments,
            factor,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vector, Vector) {
        let n = self.moments.dim();
        let z = &self.factor * standard_vector(self.kind, 2 * n, rng);
        (
            &self.moments.mean_x + z.rows(0, n),
            &self.moments.mean_y + z.rows(n, n),
        )
    }
}

/// A finitely supported joint law of `(w, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLaw {
    pub points: Vec<SupportPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    pub w: Vector,
    pub v: Vector,
    pub prob: f64,
}

impl FiniteLaw {
    /// Unit-variance signs with `E[w v] = rho`. Zero-probability points
    /// (at `|rho| = 1`) are dropped.
    pub fn four_point(rho: f64) -> Self {
        let same = (1.0 + rho) / 4.0;
        let diff = (1.0 - rho) / 4.0;
        let pt = |w: f64, v: f64, prob: f64| SupportPoint {
            w: Vector::from_element(1, w),
            v: Vector::from_element(1, v),
            prob,
        };
        let points = vec![
            pt(1.0, 1.0, same),
            pt(-1.0, -1.0, same),
            pt(1.0, -1.0, diff),
            pt(-1.0, 1.0, diff),
        ]
        .into_iter()
        .filter(|p| p.prob > 0.0)
        .collect();
        Self { points }
    }

    /// `(w, v) = L ε` over all `2^{2p}` sign vectors `ε`, where `L Lᵀ` is the
    /// joint moment matrix. Matches the first two moments exactly.
    pub fn sign_lattice(alpha: &Matrix, beta: &Matrix, gamma: &Matrix) -> Self {
        let p = alpha.nrows();
        let law = NoiseLaw {
            alpha: vec![alpha.clone()],
            beta: vec![beta.clone()],
            gamma: vec![gamma.clone()],
        };
        let l = psd_sqrt(&law.joint(0));
        let count = 1usize << (2 * p);
        let prob = 1.0 / count as f64;
        let points = (0..count)
            .map(|mask| {
                let eps = Vector::from_fn(2 * p, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
                let z = &l * eps;
                SupportPoint {
                    w: z.rows(0, p).into_owned(),
                    v: z.rows(p, p).into_owned(),
                    prob,
                }
            })
            .collect();
        Self { points }
    }

    pub fn noise_dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.w.len())
    }

    /// `(E[w], E[v], E[wwᵀ], E[vvᵀ], E[wvᵀ])`.
    pub fn moments(&self) -> (Vector, Vector, Matrix, Matrix, Matrix) {
        let p = self.noise_dim();
        let mut mw = Vector::zeros(p);
        let mut mv = Vector::zeros(p);
        let mut ww = Matrix::zeros(p, p);
        let mut vv = Matrix::zeros(p, p);
        let mut wv = Matrix::zeros(p, p);
        for pt in &self.points {
            mw += &pt.w * pt.prob;
            mv += &pt.v * pt.prob;
            ww += &pt.w * pt.w.transpose() * pt.prob;
            vv += &pt.v * pt.v.transpose() * pt.prob;
            wv += &pt.w * pt.v.transpose() * pt.prob;
        }
        (mw, mv, ww, vv, wv)
    }

    pub fn total_probability(&self) -> f64 {
        self.points.iter().map(|p| p.prob).sum()
    }
}
