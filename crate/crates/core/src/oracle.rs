//! Exact verification on a finite scenario tree.
//!
//! With finitely supported initial data and noise, an adapted control is one
//! decision vector per tree node. Every state is then an affine function of
//! the stacked control vector `u`, and the cost is the finite quadratic
//!
//! ```text
//! J(u) = uᵀ Θ₂ u + 2 (g_x + g_y)ᵀ u + c_xx + c_xy + c_yy,
//! ```
//!
//! where `g_x`, `c_xx` collect the terms driven by `ζˣ`, `g_y`, `c_yy` those
//! driven by `ζʸ`, and `c_xy` the cross terms. Its minimizer is exact.

use crate::error::{Error, Result};
use crate::linalg::{is_psd, matrix_scale, min_eigenvalue, psd_sqrt, symmetrize, Matrix, SpdFactor, Vector};
use crate::model::{InitialMoments, MultiNoiseProblemSpec};
use crate::noise::FiniteLaw;
use crate::policy::{control_unchecked, FeedbackPolicy};

/// Guard on `(#leaves) · m`.
pub const TREE_LIMIT: usize = 1_000_000;
/// Guard on the number of control variables, since `Θ₂` is dense.
pub const DENSE_LIMIT: usize = 4096;

/// Finite-support law of `(ζˣ, ζʸ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLaw {
    pub points: Vec<InitPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitPoint {
    pub x: Vector,
    pub y: Vector,
    pub prob: f64,
}

impl InitialLaw {
    pub fn deterministic(x: Vector, y: Vector) -> Self {
        Self {
            points: vec![InitPoint { x, y, prob: 1.0 }],
        }
    }

    /// Two equally likely points `μ ± δ`, with covariance `δδᵀ`.
    pub fn two_point(mean_x: &Vector, mean_y: &Vector, dx: &Vector, dy: &Vector) -> Self {
        Self {
            points: vec![
                InitPoint {
                    x: mean_x + dx,
                    y: mean_y + dy,
                    prob: 0.5,
                },
                InitPoint {
                    x: mean_x - dx,
                    y: mean_y - dy,
                    prob: 0.5,
                },
            ],
        }
    }

    /// `μ ± √(2n)·Lᵢ` for each column `Lᵢ` of a square root of the joint
    /// covariance (`4n` points, equal weights); matches the given moments.
    pub fn from_moments(init: &InitialMoments) -> Self {
        let n = init.dim();
        let l = psd_sqrt(&init.joint_covariance());
        let scale = ((2 * n) as f64).sqrt();
        let prob = 1.0 / (4 * n) as f64;
        let mut points = Vec::with_capacity(4 * n);
        for i in 0..2 * n {
            let col = l.column(i) * scale;
            for sign in [1.0, -1.0] {
                points.push(InitPoint {
                    x: &init.mean_x + col.rows(0, n) * sign,
                    y: &init.mean_y + col.rows(n, n) * sign,
                    prob,
                });
            }
        }
        Self { points }
    }

    /// Mean and covariance blocks of the law.
    pub fn moments(&self) -> InitialMoments {
        let n = self.points[0].x.len();
        let mut mx = Vector::zeros(n);
        let mut my = Vector::zeros(n);
        for p in &self.points {
            mx += &p.x * p.prob;
            my += &p.y * p.prob;
        }
        let mut cx = Matrix::zeros(n, n);
        let mut cy = Matrix::zeros(n, n);
        let mut cxy = Matrix::zeros(n, n);
        for p in &self.points {
            let dx = &p.x - &mx;
            let dy = &p.y - &my;
            cx += &dx * dx.transpose() * p.prob;
            cy += &dy * dy.transpose() * p.prob;
            cxy += &dx * dy.transpose() * p.prob;
        }
        InitialMoments {
            mean_x: mx,
            mean_y: my,
            cov_x: symmetrize(&cx),
            cov_y: symmetrize(&cy),
            cov_xy: cxy,
        }
    }
}

/// Finite noise laws matching the problem's second moments at each step:
/// the four-point sign law for one unit-variance channel, the sign lattice
/// `L ε` otherwise.
pub fn tree_laws(spec: &MultiNoiseProblemSpec) -> Vec<FiniteLaw> {
    let s = &spec.noise;
    (0..spec.base.horizon)
        .map(|k| {
            let unit = s.noise_dim == 1 && s.alpha[k][(0, 0)] == 1.0 && s.beta[k][(0, 0)] == 1.0;
            if unit {
                FiniteLaw::four_point(s.gamma[k][(0, 0)])
            } else {
                FiniteLaw::sign_lattice(&s.alpha[k], &s.beta[k], &s.gamma[k])
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// Index on the previous level (`None` on level 0).
    pub parent: Option<usize>,
    /// Support-point index of the branch taken from the parent.
    pub branch: usize,
    /// Absolute probability of the node.
    pub prob: f64,
    /// `y` at the node; liabilities do not depend on controls.
    pub y: Vector,
    /// `(w, v)` on the edge into this node.
    pub w: Vector,
    pub v: Vector,
}

/// Levels `0..=N`; nodes on level `k < N` carry controls.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    pub levels: Vec<Vec<TreeNode>>,
    pub laws: Vec<FiniteLaw>,
    pub init: InitialLaw,
    pub control_dim: usize,
    /// Column offset of level `k` controls in the stacked vector.
    pub offsets: Vec<usize>,
}

impl ScenarioTree {
    pub fn horizon(&self) -> usize {
        self.laws.len()
    }

    /// Number of control variables `d`.
    pub fn control_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn control_index(&self, k: usize, j: usize) -> usize {
        self.offsets[k] + j * self.control_dim
    }

    pub fn mean_y(&self, k: usize) -> Vector {
        let mut out = Vector::zeros(self.init.points[0].y.len());
        for node in &self.levels[k] {
            out += &node.y * node.prob;
        }
        out
    }
}

pub fn build_tree(
    spec: &MultiNoiseProblemSpec,
    laws: &[FiniteLaw],
    init: &InitialLaw,
) -> Result<ScenarioTree> {
    let base = &spec.base;
    let ch = &spec.noise;
    let (n, m, big_n) = (base.state_dim, base.control_dim, base.horizon);
    if laws.len() != big_n {
        return Err(Error::DimensionMismatch(format!(
            "expected {big_n} noise laws, got {}",
            laws.len()
        )));
    }
    if init.points.is_empty() || init.points.iter().any(|p| p.x.len() != n || p.y.len() != n) {
        return Err(Error::DimensionMismatch("initial law does not match state_dim".into()));
    }
    for (k, law) in laws.iter().enumerate() {
        if law.points.is_empty() || law.noise_dim() != ch.noise_dim {
            return Err(Error::DimensionMismatch(format!("noise law {k} does not match noise_dim")));
        }
    }
    let mut counts = vec![init.points.len()];
    for law in laws {
        let next = counts.last().unwrap().saturating_mul(law.points.len());
        counts.push(next);
    }
    let leaves_size = counts[big_n].saturating_mul(m);
    if leaves_size > TREE_LIMIT {
        return Err(Error::TreeTooLarge {
            size: leaves_size,
            limit: TREE_LIMIT,
        });
    }
    let d: usize = counts[..big_n].iter().sum::<usize>() * m;
    if d > DENSE_LIMIT {
        return Err(Error::TreeTooLarge {
            size: d,
            limit: DENSE_LIMIT,
        });
    }
    let p = ch.noise_dim;
    let mut levels: Vec<Vec<TreeNode>> = Vec::with_capacity(big_n + 1);
    levels.push(
        init.points
            .iter()
            .enumerate()
            .filter(|(_, pt)| pt.prob > 0.0)
            .map(|(i, pt)| TreeNode {
                parent: None,
                branch: i,
                prob: pt.prob,
                y: pt.y.clone(),
                w: Vector::zeros(p),
                v: Vector::zeros(p),
            })
            .collect(),
    );
    for k in 0..big_n {
        let parents = &levels[k];
        let mut ey = Vector::zeros(n);
        for node in parents {
            ey += &node.y * node.prob;
        }
        let mut next = Vec::with_capacity(parents.len() * laws[k].points.len());
        for (j, node) in parents.iter().enumerate() {
            for (b, pt) in laws[k].points.iter().enumerate() {
                let mut fy = base.f[k].clone();
                let mut fby = base.f_bar[k].clone();
                for i in 0..p {
                    fy += &ch.g[k][i] * pt.v[i];
                    fby += &ch.g_bar[k][i] * pt.v[i];
                }
                next.push(TreeNode {
                    parent: Some(j),
                    branch: b,
                    prob: node.prob * pt.prob,
                    y: fy * &node.y + fby * &ey,
                    w: pt.w.clone(),
                    v: pt.v.clone(),
                });
            }
        }
        levels.push(next);
    }
    let mut offsets = vec![0];
    for k in 0..big_n {
        offsets.push(offsets[k] + levels[k].len() * m);
    }
    Ok(ScenarioTree {
        levels,
        laws: laws.to_vec(),
        init: init.clone(),
        control_dim: m,
        offsets,
    })
}

/// Affine state map `x = X u + c` of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineState {
    pub map: Matrix,
    pub offset: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedQuadratic {
    pub theta2: Matrix,
    /// Linear term driven by `ζˣ`.
    pub g_x: Vector,
    /// Linear term driven by `ζʸ`.
    pub g_y: Vector,
    pub c_xx: f64,
    pub c_xy: f64,
    pub c_yy: f64,
    /// Per level, per node.
    pub states: Vec<Vec<AffineState>>,
}

impl StackedQuadratic {
    pub fn dim(&self) -> usize {
        self.theta2.nrows()
    }

    pub fn linear(&self) -> Vector {
        &self.g_x + &self.g_y
    }

    pub fn constant(&self) -> f64 {
        self.c_xx + self.c_xy + self.c_yy
    }

    pub fn evaluate(&self, u: &Vector) -> f64 {
        u.dot(&(&self.theta2 * u)) + 2.0 * self.linear().dot(u) + self.constant()
    }

    pub fn state(&self, k: usize, j: usize, u: &Vector) -> Vector {
        let s = &self.states[k][j];
        &s.map * u + &s.offset
    }
}

/// Adds `p · Zᵀ M Z`-type contributions where `x − y = X u + (c − y)`.
struct Accum {
    theta2: Matrix,
    g_x: Vector,
    g_y: Vector,
    c_xx: f64,
    c_xy: f64,
    c_yy: f64,
}

impl Accum {
    /// `weight · (X u + c − y)ᵀ M (X u + c − y)`.
    fn add_form(&mut self, weight: f64, m: &Matrix, x: &Matrix, c: &Vector, y: &Vector) {
        if weight == 0.0 {
            return;
        }
        let mx = m * x;
        self.theta2 += x.transpose() * &mx * weight;
        self.g_x += mx.transpose() * c * weight;
        self.g_y -= mx.transpose() * y * weight;
        let mc = m * c;
        let my = m * y;
        self.c_xx += c.dot(&mc) * weight;
        self.c_xy -= 2.0 * y.dot(&mc) * weight;
        self.c_yy += y.dot(&my) * weight;
    }
}

pub fn assemble_quadratic(tree: &ScenarioTree, spec: &MultiNoiseProblemSpec) -> StackedQuadratic {
    let base = &spec.base;
    let ch = &spec.noise;
    let (n, m, big_n, p) = (base.state_dim, base.control_dim, base.horizon, ch.noise_dim);
    let d = tree.control_count();
    let mut acc = Accum {
        theta2: Matrix::zeros(d, d),
        g_x: Vector::zeros(d),
        g_y: Vector::zeros(d),
        c_xx: 0.0,
        c_xy: 0.0,
        c_yy: 0.0,
    };
    let mut states: Vec<Vec<AffineState>> = Vec::with_capacity(big_n + 1);
    states.push(
        tree.levels[0]
            .iter()
            .map(|node| AffineState {
                map: Matrix::zeros(n, d),
                offset: tree.init.points[node.branch].x.clone(),
            })
            .collect(),
    );
    for k in 0..=big_n {
        let nodes = &tree.levels[k];
        let level = &states[k];
        // E[x_k] and E[y_k] as affine / constant
        let mut ex_map = Matrix::zeros(n, d);
        let mut ex_off = Vector::zeros(n);
        for (node, st) in nodes.iter().zip(level) {
            ex_map += &st.map * node.prob;
            ex_off += &st.offset * node.prob;
        }
        let ey = tree.mean_y(k);

        let q = &base.q[k];
        for (node, st) in nodes.iter().zip(level) {
            acc.add_form(node.prob, q, &st.map, &st.offset, &node.y);
        }
        acc.add_form(1.0, &base.q_bar[k], &ex_map, &ex_off, &ey);
        if k == big_n {
            break;
        }

        let off = tree.offsets[k];
        // node controls and E[u_k]
        let mut eu_map = Matrix::zeros(m, d);
        for (j, node) in nodes.iter().enumerate() {
            let col = off + j * m;
            let mut blk = acc.theta2.view_mut((col, col), (m, m));
            blk += &base.r[k] * node.prob;
            eu_map.view_mut((0, col), (m, m)).fill_diagonal(node.prob);
        }
        acc.theta2 += eu_map.transpose() * &base.r_bar[k] * &eu_map;

        let a_ex = &base.a_bar[k] * &ex_map;
        let a_ex_off = &base.a_bar[k] * &ex_off;
        let b_eu = &base.b_bar[k] * &eu_map;
        let mut next = Vec::with_capacity(tree.levels[k + 1].len());
        for child in &tree.levels[k + 1] {
            let j = child.parent.expect("non-root node");
            let st = &level[j];
            let col = off + j * m;
            let mut map = &base.a[k] * &st.map + &a_ex + &b_eu;
            let mut offset = &base.a[k] * &st.offset + &a_ex_off;
            let mut bu = base.b[k].clone();
            for i in 0..p {
                let w = child.w[i];
                if w == 0.0 {
                    continue;
                }
                map += (&ch.c[k][i] * &st.map + &ch.c_bar[k][i] * &ex_map + &ch.d_bar[k][i] * &eu_map) * w;
                offset += (&ch.c[k][i] * &st.offset + &ch.c_bar[k][i] * &ex_off) * w;
                bu += &ch.d[k][i] * w;
            }
            let mut blk = map.view_mut((0, col), (n, m));
            blk += bu;
            next.push(AffineState { map, offset });
        }
        states.push(next);
    }
    StackedQuadratic {
        theta2: symmetrize(&acc.theta2),
        g_x: acc.g_x,
        g_y: acc.g_y,
        c_xx: acc.c_xx,
        c_xy: acc.c_xy,
        c_yy: acc.c_yy,
        states,
    }
}

/// Smallest eigenvalue of `Θ₂` and whether it is PSD at `−1e-10 · scale`.
pub fn check_theta2_psd(quad: &StackedQuadratic) -> (bool, f64) {
    is_psd(&quad.theta2)
}

/// Exact minimizer `u* = −Θ₂⁻¹ g` and `J* = const + gᵀu*`.
pub fn brute_force_optimal(quad: &StackedQuadratic) -> Result<(Vector, f64)> {
    let lambda_min = min_eigenvalue(&quad.theta2);
    if !(lambda_min > 1e-12 * matrix_scale(&quad.theta2)) {
        return Err(Error::SingularTheta2 { lambda_min });
    }
    let fac = SpdFactor::new(&quad.theta2, "Theta2", 0).map_err(|_| Error::SingularTheta2 { lambda_min })?;
    let g = quad.linear();
    let u = -fac.solve_vec(&g);
    let j = quad.constant() + g.dot(&u);
    Ok((u, j))
}

/// Node controls generated by a feedback policy, with exact level means.
pub fn policy_controls(
    tree: &ScenarioTree,
    quad: &StackedQuadratic,
    policy: &FeedbackPolicy,
) -> Vector {
    let m = tree.control_dim;
    let mut u = Vector::zeros(tree.control_count());
    for k in 0..tree.horizon() {
        // states at level k depend only on controls at earlier levels
        let xs: Vec<Vector> = (0..tree.levels[k].len()).map(|j| quad.state(k, j, &u)).collect();
        let mut ex = Vector::zeros(xs[0].len());
        for (node, x) in tree.levels[k].iter().zip(&xs) {
            ex += x * node.prob;
        }
        let ey = tree.mean_y(k);
        for (j, node) in tree.levels[k].iter().enumerate() {
            let uk = control_unchecked(&policy.gains[k], &xs[j], &ex, &node.y, &ey);
            u.rows_mut(tree.control_index(k, j), m).copy_from(&uk);
        }
    }
    u
}

/// Exact cost of a feedback policy on the tree.
pub fn evaluate_policy(tree: &ScenarioTree, quad: &StackedQuadratic, policy: &FeedbackPolicy) -> f64 {
    quad.evaluate(&policy_controls(tree, quad, policy))
}
