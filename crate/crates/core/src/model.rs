//! Problem data for the mean-field LQ control problem with an asset state `x`
//! and a liability state `y`:
//!
//! ```text
//! x_{k+1} = A x + Ā E[x] + B u + B̄ E[u] + (C x + C̄ E[x] + D u + D̄ E[u]) w_k
//! y_{k+1} = F y + F̄ E[y] + (G y + Ḡ E[y]) v_k
//! ```
//!
//! with cost
//!
//! ```text
//! Σ_k E[(x-y)ᵀQ_k(x-y) + uᵀR_k u] + E[x-y]ᵀQ̄_k E[x-y] + E[u]ᵀR̄_k E[u]
//!   + E[(x_N-y_N)ᵀQ_N(x_N-y_N)] + E[x_N-y_N]ᵀQ̄_N E[x_N-y_N].
//! ```
//!
//! The scalar-noise form ([`ProblemSpec`]) carries the correlation
//! `rho = E[w v]`; the vector-noise form ([`MultiNoiseProblemSpec`]) carries
//! per-step second moments `alpha = E[w wᵀ]`, `beta = E[v vᵀ]`,
//! `gamma = E[w vᵀ]` of the noise applied between steps `k` and `k+1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, check_len, check_shape, is_pd, is_psd, symmetrize, Matrix, Vector};

/// Asymmetry above which loading a weight matrix records a warning.
pub const ASYMMETRY_WARN: f64 = 1e-9;

/// Deterministic coefficients and weights shared by both noise models.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseProblem {
    pub horizon: usize,
    pub state_dim: usize,
    pub control_dim: usize,
    pub a: Vec<Matrix>,
    pub a_bar: Vec<Matrix>,
    pub b: Vec<Matrix>,
    pub b_bar: Vec<Matrix>,
    pub f: Vec<Matrix>,
    pub f_bar: Vec<Matrix>,
    /// `k = 0..=N`
    pub q: Vec<Matrix>,
    /// `k = 0..=N`
    pub q_bar: Vec<Matrix>,
    pub r: Vec<Matrix>,
    pub r_bar: Vec<Matrix>,
}

impl BaseProblem {
    /// A problem with all dynamics zero, `Q = Q̄ = 0`, `R = I`, `R̄ = 0`.
    pub fn zeros(horizon: usize, state_dim: usize, control_dim: usize) -> Self {
        let n = state_dim;
        let m = control_dim;
        let nn = || vec![Matrix::zeros(n, n); horizon];
        let nm = || vec![Matrix::zeros(n, m); horizon];
        Self {
            horizon,
            state_dim,
            control_dim,
            a: nn(),
            a_bar: nn(),
            b: nm(),
            b_bar: nm(),
            f: nn(),
            f_bar: nn(),
            q: vec![Matrix::zeros(n, n); horizon + 1],
            q_bar: vec![Matrix::zeros(n, n); horizon + 1],
            r: vec![Matrix::identity(m, m); horizon],
            r_bar: vec![Matrix::zeros(m, m); horizon],
        }
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let (n, m, big_n) = (self.state_dim, self.control_dim, self.horizon);
        if big_n == 0 || n == 0 || m == 0 {
            return Err(Error::InvalidInput(
                "horizon, state_dim and control_dim must be positive".into(),
            ));
        }
        let per_step: [(&str, &Vec<Matrix>, usize, usize, usize); 10] = [
            ("A", &self.a, big_n, n, n),
            ("A_bar", &self.a_bar, big_n, n, n),
            ("B", &self.b, big_n, n, m),
            ("B_bar", &self.b_bar, big_n, n, m),
            ("F", &self.f, big_n, n, n),
            ("F_bar", &self.f_bar, big_n, n, n),
            ("Q", &self.q, big_n + 1, n, n),
            ("Q_bar", &self.q_bar, big_n + 1, n, n),
            ("R", &self.r, big_n, m, m),
            ("R_bar", &self.r_bar, big_n, m, m),
        ];
        for (name, seq, len, rows, cols) in per_step {
            check_sequence(name, seq, len, rows, cols)?;
        }
        Ok(())
    }

    /// Asymmetry warnings for declared-symmetric weights (before symmetrizing).
    pub fn asymmetry_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, seq) in [
            ("Q", &self.q),
            ("Q_bar", &self.q_bar),
            ("R", &self.r),
            ("R_bar", &self.r_bar),
        ] {
            for (k, mat) in seq.iter().enumerate() {
                let a = asymmetry(mat);
                if a > ASYMMETRY_WARN {
                    out.push(format!("{name}[{k}] asymmetric by {a:e}; symmetrized"));
                }
            }
        }
        out
    }

    pub fn symmetrize_weights(&mut self) {
        for seq in [&mut self.q, &mut self.q_bar, &mut self.r, &mut self.r_bar] {
            for mat in seq.iter_mut() {
                *mat = symmetrize(mat);
            }
        }
    }

    /// Multiply every weight (Q, Q̄, R, R̄) by `c`.
    pub fn scale_weights(&mut self, c: f64) {
        for seq in [&mut self.q, &mut self.q_bar, &mut self.r, &mut self.r_bar] {
            for mat in seq.iter_mut() {
                *mat *= c;
            }
        }
    }

    fn weight_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for k in 0..=self.horizon {
            let (ok, lambda) = is_psd(&self.q[k]);
            if !ok {
                out.push(Violation::new(Condition::QPsd, k, lambda));
            }
            let (ok, lambda) = is_psd(&(&self.q[k] + &self.q_bar[k]));
            if !ok {
                out.push(Violation::new(Condition::QPlusQBarPsd, k, lambda));
            }
        }
        for k in 0..self.horizon {
            let (ok, lambda) = is_pd(&self.r[k]);
            if !ok {
                out.push(Violation::new(Condition::RPositive, k, lambda));
            }
            let (ok, lambda) = is_pd(&(&self.r[k] + &self.r_bar[k]));
            if !ok {
                out.push(Violation::new(Condition::RPlusRBarPositive, k, lambda));
            }
        }
        out
    }
}

fn check_sequence(
    name: &str,
    seq: &[Matrix],
    len: usize,
    rows: usize,
    cols: usize,
) -> Result<()> {
    if seq.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{name}: expected {len} matrices, got {}",
            seq.len()
        )));
    }
    for (k, mat) in seq.iter().enumerate() {
        check_shape(mat, rows, cols, &format!("{name}[{k}]"))?;
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("{name}[{k}] has non-finite entries")));
        }
    }
    Ok(())
}

/// Access to the shared deterministic part of either problem form.
pub trait MeanFieldProblem {
    fn base(&self) -> &BaseProblem;
}

impl MeanFieldProblem for BaseProblem {
    fn base(&self) -> &BaseProblem {
        self
    }
}

/// Scalar multiplicative noise coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarNoise {
    pub c: Vec<Matrix>,
    pub c_bar: Vec<Matrix>,
    pub d: Vec<Matrix>,
    pub d_bar: Vec<Matrix>,
    pub g: Vec<Matrix>,
    pub g_bar: Vec<Matrix>,
    /// `E[w_k v_k]`
    pub rho: f64,
}

impl ScalarNoise {
    pub fn zeros(horizon: usize, state_dim: usize, control_dim: usize) -> Self {
        let nn = vec![Matrix::zeros(state_dim, state_dim); horizon];
        let nm = vec![Matrix::zeros(state_dim, control_dim); horizon];
        Self {
            c: nn.clone(),
            c_bar: nn.clone(),
            d: nm.clone(),
            d_bar: nm,
            g: nn.clone(),
            g_bar: nn,
            rho: 0.0,
        }
    }
}

/// Scalar-noise problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub base: BaseProblem,
    pub noise: ScalarNoise,
}

impl ProblemSpec {
    /// Checks dimensions, symmetrizes the weights and checks `|rho| ≤ 1`.
    pub fn new(mut base: BaseProblem, noise: ScalarNoise) -> Result<Self> {
        base.check_dimensions()?;
        let (n, m, big_n) = (base.state_dim, base.control_dim, base.horizon);
        check_sequence("C", &noise.c, big_n, n, n)?;
        check_sequence("C_bar", &noise.c_bar, big_n, n, n)?;
        check_sequence("D", &noise.d, big_n, n, m)?;
        check_sequence("D_bar", &noise.d_bar, big_n, n, m)?;
        check_sequence("G", &noise.g, big_n, n, n)?;
        check_sequence("G_bar", &noise.g_bar, big_n, n, n)?;
        if !(noise.rho.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "rho must satisfy |rho| <= 1, got {}",
                noise.rho
            )));
        }
        base.symmetrize_weights();
        Ok(Self { base, noise })
    }

    pub fn horizon(&self) -> usize {
        self.base.horizon
    }

    /// The same problem as a `p = 1` vector-noise problem with
    /// `alpha = beta = [1]`, `gamma = [rho]`.
    pub fn to_multinoise(&self) -> MultiNoiseProblemSpec {
        let big_n = self.base.horizon;
        let wrap = |seq: &Vec<Matrix>| seq.iter().map(|m| vec![m.clone()]).collect::<Vec<_>>();
        let one = Matrix::from_element(1, 1, 1.0);
        MultiNoiseProblemSpec {
            base: self.base.clone(),
            noise: NoiseChannels {
                noise_dim: 1,
                c: wrap(&self.noise.c),
                c_bar: wrap(&self.noise.c_bar),
                d: wrap(&self.noise.d),
                d_bar: wrap(&self.noise.d_bar),
                g: wrap(&self.noise.g),
                g_bar: wrap(&self.noise.g_bar),
                alpha: vec![one.clone(); big_n],
                beta: vec![one; big_n],
                gamma: vec![Matrix::from_element(1, 1, self.noise.rho); big_n],
            },
        }
    }
}

impl MeanFieldProblem for ProblemSpec {
    fn base(&self) -> &BaseProblem {
        &self.base
    }
}

/// Vector multiplicative noise: `p` channels per state equation.
///
/// Matrix sequences are indexed `[k][i]`, `k` the step and `i` the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannels {
    pub noise_dim: usize,
    pub c: Vec<Vec<Matrix>>,
    pub c_bar: Vec<Vec<Matrix>>,
    pub d: Vec<Vec<Matrix>>,
    pub d_bar: Vec<Vec<Matrix>>,
    pub g: Vec<Vec<Matrix>>,
    pub g_bar: Vec<Vec<Matrix>>,
    /// `E[w_k w_kᵀ]`
    pub alpha: Vec<Matrix>,
    /// `E[v_k v_kᵀ]`
    pub beta: Vec<Matrix>,
    /// `E[w_k v_kᵀ]`
    pub gamma: Vec<Matrix>,
}

impl NoiseChannels {
    pub fn zeros(horizon: usize, state_dim: usize, control_dim: usize, noise_dim: usize) -> Self {
        let nn = vec![vec![Matrix::zeros(state_dim, state_dim); noise_dim]; horizon];
        let nm = vec![vec![Matrix::zeros(state_dim, control_dim); noise_dim]; horizon];
        let pp = vec![Matrix::zeros(noise_dim, noise_dim); horizon];
        Self {
            noise_dim,
            c: nn.clone(),
            c_bar: nn.clone(),
            d: nm.clone(),
            d_bar: nm,
            g: nn.clone(),
            g_bar: nn,
            alpha: pp.clone(),
            beta: pp.clone(),
            gamma: pp,
        }
    }

    /// `[[alpha, gamma], [gammaᵀ, beta]]` at step `k`.
    pub fn joint_moment(&self, k: usize) -> Matrix {
        let p = self.noise_dim;
        let mut out = Matrix::zeros(2 * p, 2 * p);
        out.view_mut((0, 0), (p, p)).copy_from(&self.alpha[k]);
        out.view_mut((0, p), (p, p)).copy_from(&self.gamma[k]);
        out.view_mut((p, 0), (p, p)).copy_from(&self.gamma[k].transpose());
        out.view_mut((p, p), (p, p)).copy_from(&self.beta[k]);
        out
    }
}

/// Vector-noise problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiNoiseProblemSpec {
    pub base: BaseProblem,
    pub noise: NoiseChannels,
}

impl MultiNoiseProblemSpec {
    pub fn new(mut base: BaseProblem, mut noise: NoiseChannels) -> Result<Self> {
        base.check_dimensions()?;
        let (n, m, big_n, p) = (base.state_dim, base.control_dim, base.horizon, noise.noise_dim);
        if p == 0 {
            return Err(Error::InvalidInput("noise_dim must be positive".into()));
        }
        for (name, seq, rows, cols) in [
            ("C", &noise.c, n, n),
            ("C_bar", &noise.c_bar, n, n),
            ("D", &noise.d, n, m),
            ("D_bar", &noise.d_bar, n, m),
            ("G", &noise.g, n, n),
            ("G_bar", &noise.g_bar, n, n),
        ] {
            if seq.len() != big_n {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: expected {big_n} steps, got {}",
                    seq.len()
                )));
            }
            for (k, channels) in seq.iter().enumerate() {
                check_sequence(&format!("{name}[{k}]"), channels, p, rows, cols)?;
            }
        }
        check_sequence("alpha", &noise.alpha, big_n, p, p)?;
        check_sequence("beta", &noise.beta, big_n, p, p)?;
        check_sequence("gamma", &noise.gamma, big_n, p, p)?;
        base.symmetrize_weights();
        for k in 0..big_n {
            noise.alpha[k] = symmetrize(&noise.alpha[k]);
            noise.beta[k] = symmetrize(&noise.beta[k]);
        }
        Ok(Self { base, noise })
    }

    pub fn horizon(&self) -> usize {
        self.base.horizon
    }

    pub fn noise_dim(&self) -> usize {
        self.noise.noise_dim
    }
}

impl MeanFieldProblem for MultiNoiseProblemSpec {
    fn base(&self) -> &BaseProblem {
        &self.base
    }
}

/// First and second moments of the initial states.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialMoments {
    pub mean_x: Vector,
    pub mean_y: Vector,
    pub cov_x: Matrix,
    pub cov_y: Matrix,
    /// `E[(ζˣ - Eζˣ)(ζʸ - Eζʸ)ᵀ]`
    pub cov_xy: Matrix,
}

impl InitialMoments {
    pub fn new(
        mean_x: Vector,
        mean_y: Vector,
        cov_x: Matrix,
        cov_y: Matrix,
        cov_xy: Matrix,
    ) -> Result<Self> {
        let n = mean_x.len();
        check_len(&mean_y, n, "mean_y")?;
        check_shape(&cov_x, n, n, "cov_x")?;
        check_shape(&cov_y, n, n, "cov_y")?;
        check_shape(&cov_xy, n, n, "cov_xy")?;
        let out = Self {
            mean_x,
            mean_y,
            cov_x: symmetrize(&cov_x),
            cov_y: symmetrize(&cov_y),
            cov_xy,
        };
        let (ok, lambda) = is_psd(&out.joint_covariance());
        if !ok {
            return Err(Error::InvalidInput(format!(
                "initial joint covariance is not PSD (lambda_min = {lambda:e})"
            )));
        }
        Ok(out)
    }

    /// Zero means, identity covariances, no cross-covariance.
    pub fn standard(n: usize) -> Self {
        Self {
            mean_x: Vector::zeros(n),
            mean_y: Vector::zeros(n),
            cov_x: Matrix::identity(n, n),
            cov_y: Matrix::identity(n, n),
            cov_xy: Matrix::zeros(n, n),
        }
    }

    pub fn deterministic(mean_x: Vector, mean_y: Vector) -> Self {
        let n = mean_x.len();
        Self {
            mean_x,
            mean_y,
            cov_x: Matrix::zeros(n, n),
            cov_y: Matrix::zeros(n, n),
            cov_xy: Matrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean_x.len()
    }

    /// Covariance of the stacked vector `(ζˣ, ζʸ)`.
    pub fn joint_covariance(&self) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&self.cov_x);
        out.view_mut((0, n), (n, n)).copy_from(&self.cov_xy);
        out.view_mut((n, 0), (n, n)).copy_from(&self.cov_xy.transpose());
        out.view_mut((n, n), (n, n)).copy_from(&self.cov_y);
        out
    }
}

/// Solvability conditions checked by [`validate_problem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    #[serde(rename = "Q_psd")]
    QPsd,
    #[serde(rename = "Q_plus_Q_bar_psd")]
    QPlusQBarPsd,
    #[serde(rename = "R_positive")]
    RPositive,
    #[serde(rename = "R_plus_R_bar_positive")]
    RPlusRBarPositive,
    #[serde(rename = "alpha_psd")]
    AlphaPsd,
    #[serde(rename = "beta_psd")]
    BetaPsd,
    #[serde(rename = "joint_moment_psd")]
    JointMomentPsd,
}

impl Condition {
    pub fn id(self) -> &'static str {
        match self {
            Condition::QPsd => "Q_psd",
            Condition::QPlusQBarPsd => "Q_plus_Q_bar_psd",
            Condition::RPositive => "R_positive",
            Condition::RPlusRBarPositive => "R_plus_R_bar_positive",
            Condition::AlphaPsd => "alpha_psd",
            Condition::BetaPsd => "beta_psd",
            Condition::JointMomentPsd => "joint_moment_psd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub k: usize,
    pub lambda_min: f64,
}

impl Violation {
    fn new(condition: Condition, k: usize, lambda_min: f64) -> Self {
        Self {
            condition,
            k,
            lambda_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }
}

pub trait Validate {
    fn validate(&self) -> ValidationReport;
}

impl Validate for ProblemSpec {
    fn validate(&self) -> ValidationReport {
        ValidationReport::from_violations(self.base.weight_violations())
    }
}

impl Validate for MultiNoiseProblemSpec {
    fn validate(&self) -> ValidationReport {
        let mut violations = self.base.weight_violations();
        for k in 0..self.base.horizon {
            let (ok, lambda) = is_psd(&self.noise.alpha[k]);
            if !ok {
                violations.push(Violation::new(Condition::AlphaPsd, k, lambda));
            }
            let (ok, lambda) = is_psd(&self.noise.beta[k]);
            if !ok {
                violations.push(Violation::new(Condition::BetaPsd, k, lambda));
            }
            let (ok, lambda) = is_psd(&self.noise.joint_moment(k));
            if !ok {
                violations.push(Violation::new(Condition::JointMomentPsd, k, lambda));
            }
        }
        ValidationReport::from_violations(violations)
    }
}

/// Checks `Q_k ⪰ 0`, `Q_k + Q̄_k ⪰ 0` for `k ≤ N` and `R_k ≻ 0`,
/// `R_k + R̄_k ≻ 0` for `k < N`; for vector noise also the moment matrices.
pub fn validate_problem<P: Validate + ?Sized>(spec: &P) -> ValidationReport {
    spec.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(horizon: usize) -> ProblemSpec {
        ProblemSpec::new(
            BaseProblem::zeros(horizon, 2, 1),
            ScalarNoise::zeros(horizon, 2, 1),
        )
        .unwrap()
    }

    #[test]
    fn zero_q_identity_r_is_valid() {
        let report = validate_problem(&tiny(3));
        assert!(report.ok);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn negative_r_reports_step() {
        let mut spec = tiny(2);
        spec.base.r[0] = -Matrix::identity(1, 1);
        let report = validate_problem(&spec);
        assert!(!report.ok);
        let v = &report.violations[0];
        assert_eq!(v.condition, Condition::RPositive);
        assert_eq!(v.k, 0);
        assert!(v.lambda_min < 0.0);
        // R + R̄ also fails at k = 0
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == Condition::RPlusRBarPositive && v.k == 0));
    }

    #[test]
    fn zero_r_is_not_strictly_positive() {
        let mut spec = tiny(2);
        spec.base.r[1] = Matrix::zeros(1, 1);
        let report = validate_problem(&spec);
        assert!(!report.ok);
        assert_eq!(report.violations[0].k, 1);
    }

    #[test]
    fn every_violation_is_reported() {
        let mut spec = tiny(3);
        spec.base.q[3] = -Matrix::identity(2, 2);
        spec.base.r_bar[1] = -2.0 * Matrix::identity(1, 1);
        let report = validate_problem(&spec);
        let ids: Vec<_> = report.violations.iter().map(|v| (v.condition.id(), v.k)).collect();
        assert!(ids.contains(&("Q_psd", 3)));
        assert!(ids.contains(&("Q_plus_Q_bar_psd", 3)));
        assert!(ids.contains(&("R_plus_R_bar_positive", 1)));
        assert_eq!(report.violations.len(), 3);
    }

    #[test]
    fn rho_out_of_range_is_rejected() {
        let mut noise = ScalarNoise::zeros(1, 1, 1);
        noise.rho = 1.5;
        assert!(ProblemSpec::new(BaseProblem::zeros(1, 1, 1), noise).is_err());
    }

    #[test]
    fn bad_dimensions_are_rejected() {
        let mut base = BaseProblem::zeros(2, 2, 1);
        base.b[1] = Matrix::zeros(2, 2);
        assert!(matches!(
            ProblemSpec::new(base, ScalarNoise::zeros(2, 2, 1)),
            Err(Error::DimensionMismatch(_))
        ));
        let mut base = BaseProblem::zeros(2, 2, 1);
        base.q.pop();
        assert!(ProblemSpec::new(base, ScalarNoise::zeros(2, 2, 1)).is_err());
    }

    #[test]
    fn weights_are_symmetrized_on_construction() {
        let mut base = BaseProblem::zeros(1, 2, 1);
        base.q[0] = Matrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
        assert_eq!(base.asymmetry_warnings().len(), 1);
        let spec = ProblemSpec::new(base, ScalarNoise::zeros(1, 2, 1)).unwrap();
        assert_eq!(spec.base.q[0][(0, 1)], 0.1);
        assert_eq!(spec.base.q[0][(1, 0)], 0.1);
    }

    #[test]
    fn lift_agrees_on_validation() {
        let mut spec = tiny(2);
        spec.noise.rho = 0.3;
        let lifted = spec.to_multinoise();
        assert_eq!(lifted.noise.gamma[0][(0, 0)], 0.3);
        assert_eq!(validate_problem(&spec).ok, validate_problem(&lifted).ok);
        spec.base.r[1] = -Matrix::identity(1, 1);
        let lifted = spec.to_multinoise();
        assert_eq!(validate_problem(&spec), {
            let mut r = validate_problem(&lifted);
            r.violations.retain(|v| {
                !matches!(
                    v.condition,
                    Condition::AlphaPsd | Condition::BetaPsd | Condition::JointMomentPsd
                )
            });
            r
        });
    }

    #[test]
    fn invalid_joint_moment_is_flagged() {
        let mut noise = NoiseChannels::zeros(1, 1, 1, 1);
        noise.alpha[0] = Matrix::from_element(1, 1, 1.0);
        noise.beta[0] = Matrix::from_element(1, 1, 1.0);
        noise.gamma[0] = Matrix::from_element(1, 1, 1.5);
        let spec = MultiNoiseProblemSpec::new(BaseProblem::zeros(1, 1, 1), noise).unwrap();
        let report = validate_problem(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == Condition::JointMomentPsd));
    }

    #[test]
    fn initial_moments_reject_invalid_joint_covariance() {
        let one = Matrix::identity(1, 1);
        let err = InitialMoments::new(
            Vector::zeros(1),
            Vector::zeros(1),
            one.clone(),
            one.clone(),
            2.0 * one,
        );
        assert!(err.is_err());
    }
}
