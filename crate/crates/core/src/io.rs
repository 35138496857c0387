//! JSON problem documents.
//!
//! Matrices are row-major nested arrays. Per-step sequences are arrays of
//! matrices; vector-noise coefficients are arrays (over steps) of arrays
//! (over channels) of matrices. Unknown keys are rejected. Noise and
//! mean-field coefficient arrays may be omitted, in which case they are zero.

use serde::{Deserialize, Serialize};

use crate::alm::AlmProblem;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::model::{BaseProblem, InitialMoments, MultiNoiseProblemSpec, NoiseChannels, ProblemSpec, ScalarNoise};

pub type Rows = Vec<Vec<f64>>;

pub fn matrix_to_rows(m: &Matrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &Rows, what: &str) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!("{what}: ragged rows")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what}: non-finite entry")));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn seq_to_rows(seq: &[Matrix]) -> Vec<Rows> {
    seq.iter().map(matrix_to_rows).collect()
}

fn rows_to_seq(seq: &[Rows], what: &str) -> Result<Vec<Matrix>> {
    seq.iter()
        .enumerate()
        .map(|(k, r)| rows_to_matrix(r, &format!("{what}[{k}]")))
        .collect()
}

fn opt_seq(
    seq: &Option<Vec<Rows>>,
    what: &str,
    len: usize,
    rows: usize,
    cols: usize,
) -> Result<Vec<Matrix>> {
    match seq {
        Some(s) => rows_to_seq(s, what),
        None => Ok(vec![Matrix::zeros(rows, cols); len]),
    }
}

fn channels_to_rows(seq: &[Vec<Matrix>]) -> Vec<Vec<Rows>> {
    seq.iter().map(|c| seq_to_rows(c)).collect()
}

fn opt_channels(
    seq: &Option<Vec<Vec<Rows>>>,
    what: &str,
    shape: (usize, usize, usize, usize),
) -> Result<Vec<Vec<Matrix>>> {
    let (len, p, rows, cols) = shape;
    match seq {
        Some(s) => s
            .iter()
            .enumerate()
            .map(|(k, c)| rows_to_seq(c, &format!("{what}[{k}]")))
            .collect(),
        None => Ok(vec![vec![Matrix::zeros(rows, cols); p]; len]),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ProblemDoc {
    pub horizon: usize,
    pub state_dim: usize,
    pub control_dim: usize,
    pub A: Vec<Rows>,
    #[serde(default)]
    pub A_bar: Option<Vec<Rows>>,
    pub B: Vec<Rows>,
    #[serde(default)]
    pub B_bar: Option<Vec<Rows>>,
    #[serde(default)]
    pub C: Option<Vec<Rows>>,
    #[serde(default)]
    pub C_bar: Option<Vec<Rows>>,
    #[serde(default)]
    pub D: Option<Vec<Rows>>,
    #[serde(default)]
    pub D_bar: Option<Vec<Rows>>,
    pub F: Vec<Rows>,
    #[serde(default)]
    pub F_bar: Option<Vec<Rows>>,
    #[serde(default)]
    pub G: Option<Vec<Rows>>,
    #[serde(default)]
    pub G_bar: Option<Vec<Rows>>,
    pub Q: Vec<Rows>,
    #[serde(default)]
    pub Q_bar: Option<Vec<Rows>>,
    pub R: Vec<Rows>,
    #[serde(default)]
    pub R_bar: Option<Vec<Rows>>,
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct MultiNoiseDoc {
    pub horizon: usize,
    pub state_dim: usize,
    pub control_dim: usize,
    pub noise_dim: usize,
    pub A: Vec<Rows>,
    #[serde(default)]
    pub A_bar: Option<Vec<Rows>>,
    pub B: Vec<Rows>,
    #[serde(default)]
    pub B_bar: Option<Vec<Rows>>,
    #[serde(default)]
    pub C: Option<Vec<Vec<Rows>>>,
    #[serde(default)]
    pub C_bar: Option<Vec<Vec<Rows>>>,
    #[serde(default)]
    pub D: Option<Vec<Vec<Rows>>>,
    #[serde(default)]
    pub D_bar: Option<Vec<Vec<Rows>>>,
    pub F: Vec<Rows>,
    #[serde(default)]
    pub F_bar: Option<Vec<Rows>>,
    #[serde(default)]
    pub G: Option<Vec<Vec<Rows>>>,
    #[serde(default)]
    pub G_bar: Option<Vec<Vec<Rows>>>,
    pub Q: Vec<Rows>,
    #[serde(default)]
    pub Q_bar: Option<Vec<Rows>>,
    pub R: Vec<Rows>,
    #[serde(default)]
    pub R_bar: Option<Vec<Rows>>,
    pub alpha: Vec<Rows>,
    pub beta: Vec<Rows>,
    pub gamma: Vec<Rows>,
}

struct BaseParts<'a> {
    horizon: usize,
    n: usize,
    m: usize,
    a: &'a [Rows],
    a_bar: &'a Option<Vec<Rows>>,
    b: &'a [Rows],
    b_bar: &'a Option<Vec<Rows>>,
    f: &'a [Rows],
    f_bar: &'a Option<Vec<Rows>>,
    q: &'a [Rows],
    q_bar: &'a Option<Vec<Rows>>,
    r: &'a [Rows],
    r_bar: &'a Option<Vec<Rows>>,
}

impl BaseParts<'_> {
    fn build(&self) -> Result<BaseProblem> {
        let (big_n, n, m) = (self.horizon, self.n, self.m);
        Ok(BaseProblem {
            horizon: big_n,
            state_dim: n,
            control_dim: m,
            a: rows_to_seq(self.a, "A")?,
            a_bar: opt_seq(self.a_bar, "A_bar", big_n, n, n)?,
            b: rows_to_seq(self.b, "B")?,
            b_bar: opt_seq(self.b_bar, "B_bar", big_n, n, m)?,
            f: rows_to_seq(self.f, "F")?,
            f_bar: opt_seq(self.f_bar, "F_bar", big_n, n, n)?,
            q: rows_to_seq(self.q, "Q")?,
            q_bar: opt_seq(self.q_bar, "Q_bar", big_n + 1, n, n)?,
            r: rows_to_seq(self.r, "R")?,
            r_bar: opt_seq(self.r_bar, "R_bar", big_n, m, m)?,
        })
    }
}

/// A parsed document together with load-time warnings.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

impl ProblemDoc {
    pub fn from_spec(spec: &ProblemSpec) -> Self {
        let b = &spec.base;
        let s = &spec.noise;
        Self {
            horizon: b.horizon,
            state_dim: b.state_dim,
            control_dim: b.control_dim,
            A: seq_to_rows(&b.a),
            A_bar: Some(seq_to_rows(&b.a_bar)),
            B: seq_to_rows(&b.b),
            B_bar: Some(seq_to_rows(&b.b_bar)),
            C: Some(seq_to_rows(&s.c)),
            C_bar: Some(seq_to_rows(&s.c_bar)),
            D: Some(seq_to_rows(&s.d)),
            D_bar: Some(seq_to_rows(&s.d_bar)),
            F: seq_to_rows(&b.f),
            F_bar: Some(seq_to_rows(&b.f_bar)),
            G: Some(seq_to_rows(&s.g)),
            G_bar: Some(seq_to_rows(&s.g_bar)),
            Q: seq_to_rows(&b.q),
            Q_bar: Some(seq_to_rows(&b.q_bar)),
            R: seq_to_rows(&b.r),
            R_bar: Some(seq_to_rows(&b.r_bar)),
            rho: s.rho,
        }
    }

    pub fn into_spec(self) -> Result<Loaded<ProblemSpec>> {
        let (big_n, n, m) = (self.horizon, self.state_dim, self.control_dim);
        let base = BaseParts {
            horizon: big_n,
            n,
            m,
            a: &self.A,
            a_bar: &self.A_bar,
            b: &self.B,
            b_bar: &self.B_bar,
            f: &self.F,
            f_bar: &self.F_bar,
            q: &self.Q,
            q_bar: &self.Q_bar,
            r: &self.R,
            r_bar: &self.R_bar,
        }
        .build()?;
        let noise = ScalarNoise {
            c: opt_seq(&self.C, "C", big_n, n, n)?,
            c_bar: opt_seq(&self.C_bar, "C_bar", big_n, n, n)?,
            d: opt_seq(&self.D, "D", big_n, n, m)?,
            d_bar: opt_seq(&self.D_bar, "D_bar", big_n, n, m)?,
            g: opt_seq(&self.G, "G", big_n, n, n)?,
            g_bar: opt_seq(&self.G_bar, "G_bar", big_n, n, n)?,
            rho: self.rho,
        };
        let warnings = base.asymmetry_warnings();
        Ok(Loaded {
            value: ProblemSpec::new(base, noise)?,
            warnings,
        })
    }
}

impl MultiNoiseDoc {
    pub fn from_spec(spec: &MultiNoiseProblemSpec) -> Self {
        let b = &spec.base;
        let s = &spec.noise;
        Self {
            horizon: b.horizon,
            state_dim: b.state_dim,
            control_dim: b.control_dim,
            noise_dim: s.noise_dim,
            A: seq_to_rows(&b.a),
            A_bar: Some(seq_to_rows(&b.a_bar)),
            B: seq_to_rows(&b.b),
            B_bar: Some(seq_to_rows(&b.b_bar)),
            C: Some(channels_to_rows(&s.c)),
            C_bar: Some(channels_to_rows(&s.c_bar)),
            D: Some(channels_to_rows(&s.d)),
            D_bar: Some(channels_to_rows(&s.d_bar)),
            F: seq_to_rows(&b.f),
            F_bar: Some(seq_to_rows(&b.f_bar)),
            G: Some(channels_to_rows(&s.g)),
            G_bar: Some(channels_to_rows(&s.g_bar)),
            Q: seq_to_rows(&b.q),
            Q_bar: Some(seq_to_rows(&b.q_bar)),
            R: seq_to_rows(&b.r),
            R_bar: Some(seq_to_rows(&b.r_bar)),
            alpha: seq_to_rows(&s.alpha),
            beta: seq_to_rows(&s.beta),
            gamma: seq_to_rows(&s.gamma),
        }
    }

    pub fn into_spec(self) -> Result<Loaded<MultiNoiseProblemSpec>> {
        let (big_n, n, m, p) = (self.horizon, self.state_dim, self.control_dim, self.noise_dim);
        let base = BaseParts {
            horizon: big_n,
            n,
            m,
            a: &self.A,
            a_bar: &self.A_bar,
            b: &self.B,
            b_bar: &self.B_bar,
            f: &self.F,
            f_bar: &self.F_bar,
            q: &self.Q,
            q_bar: &self.Q_bar,
            r: &self.R,
            r_bar: &self.R_bar,
        }
        .build()?;
        let noise = NoiseChannels {
            noise_dim: p,
            c: opt_channels(&self.C, "C", (big_n, p, n, n))?,
            c_bar: opt_channels(&self.C_bar, "C_bar", (big_n, p, n, n))?,
            d: opt_channels(&self.D, "D", (big_n, p, n, m))?,
            d_bar: opt_channels(&self.D_bar, "D_bar", (big_n, p, n, m))?,
            g: opt_channels(&self.G, "G", (big_n, p, n, n))?,
            g_bar: opt_channels(&self.G_bar, "G_bar", (big_n, p, n, n))?,
            alpha: rows_to_seq(&self.alpha, "alpha")?,
            beta: rows_to_seq(&self.beta, "beta")?,
            gamma: rows_to_seq(&self.gamma, "gamma")?,
        };
        let warnings = base.asymmetry_warnings();
        Ok(Loaded {
            value: MultiNoiseProblemSpec::new(base, noise)?,
            warnings,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct AlmDoc {
    pub horizon: usize,
    pub asset_count: usize,
    pub a: Vec<f64>,
    pub f: Vec<f64>,
    /// One row `E[B_k]` per step.
    pub mean_excess: Vec<Vec<f64>>,
    pub cov_excess: Vec<Rows>,
    pub R: Vec<Rows>,
    pub q_N: f64,
    pub q_bar_N: f64,
}

impl AlmDoc {
    pub fn from_problem(alm: &AlmProblem) -> Self {
        Self {
            horizon: alm.horizon,
            asset_count: alm.asset_count,
            a: alm.a.clone(),
            f: alm.f.clone(),
            mean_excess: alm.mean_excess.iter().map(|v| v.iter().copied().collect()).collect(),
            cov_excess: seq_to_rows(&alm.cov_excess),
            R: seq_to_rows(&alm.r),
            q_N: alm.q_n,
            q_bar_N: alm.q_bar_n,
        }
    }

    pub fn into_problem(self) -> Result<AlmProblem> {
        let mean_excess = self
            .mean_excess
            .into_iter()
            .map(Vector::from_vec)
            .collect();
        AlmProblem::new(
            self.horizon,
            self.asset_count,
            self.a,
            self.f,
            mean_excess,
            rows_to_seq(&self.cov_excess, "cov_excess")?,
            rows_to_seq(&self.R, "R")?,
            self.q_N,
            self.q_bar_N,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMomentsDoc {
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub cov_x: Rows,
    pub cov_y: Rows,
    #[serde(default)]
    pub cov_xy: Option<Rows>,
}

impl InitialMomentsDoc {
    pub fn from_moments(init: &InitialMoments) -> Self {
        Self {
            mean_x: init.mean_x.iter().copied().collect(),
            mean_y: init.mean_y.iter().copied().collect(),
            cov_x: matrix_to_rows(&init.cov_x),
            cov_y: matrix_to_rows(&init.cov_y),
            cov_xy: Some(matrix_to_rows(&init.cov_xy)),
        }
    }

    pub fn into_moments(self) -> Result<InitialMoments> {
        let n = self.mean_x.len();
        let cov_xy = match &self.cov_xy {
            Some(r) => rows_to_matrix(r, "cov_xy")?,
            None => Matrix::zeros(n, n),
        };
        InitialMoments::new(
            Vector::from_vec(self.mean_x),
            Vector::from_vec(self.mean_y),
            rows_to_matrix(&self.cov_x, "cov_x")?,
            rows_to_matrix(&self.cov_y, "cov_y")?,
            cov_xy,
        )
    }
}

/// Either problem form, as detected from the document.
#[derive(Debug, Clone)]
pub enum AnyProblem {
    Scalar(ProblemSpec),
    Multi(MultiNoiseProblemSpec),
}

impl AnyProblem {
    pub fn base(&self) -> &BaseProblem {
        match self {
            AnyProblem::Scalar(s) => &s.base,
            AnyProblem::Multi(s) => &s.base,
        }
    }
}

/// Parses a scalar or vector-noise problem; a top-level `noise_dim` key
/// selects the vector-noise schema.
pub fn parse_problem(text: &str) -> Result<Loaded<AnyProblem>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let multi = value.get("noise_dim").is_some();
    if multi {
        let doc: MultiNoiseDoc = serde_json::from_str(text)?;
        let loaded = doc.into_spec()?;
        Ok(Loaded {
            value: AnyProblem::Multi(loaded.value),
            warnings: loaded.warnings,
        })
    } else {
        let doc: ProblemDoc = serde_json::from_str(text)?;
        let loaded = doc.into_spec()?;
        Ok(Loaded {
            value: AnyProblem::Scalar(loaded.value),
            warnings: loaded.warnings,
        })
    }
}

pub fn problem_to_json(spec: &ProblemSpec) -> String {
    serde_json::to_string_pretty(&ProblemDoc::from_spec(spec)).expect("serializable")
}

pub fn multinoise_to_json(spec: &MultiNoiseProblemSpec) -> String {
    serde_json::to_string_pretty(&MultiNoiseDoc::from_spec(spec)).expect("serializable")
}

pub fn parse_alm(text: &str) -> Result<AlmProblem> {
    let doc: AlmDoc = serde_json::from_str(text)?;
    doc.into_problem()
}

pub fn alm_to_json(alm: &AlmProblem) -> String {
    serde_json::to_string_pretty(&AlmDoc::from_problem(alm)).expect("serializable")
}

pub fn parse_initial_moments(text: &str) -> Result<InitialMoments> {
    let doc: InitialMomentsDoc = serde_json::from_str(text)?;
    doc.into_moments()
}
