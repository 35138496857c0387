//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Tolerance for `⪰ 0` checks, applied relative to `1 + ‖M‖_F`.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance for `≻ 0` checks, applied relative to `1 + ‖M‖_F`.
pub const PD_TOL: f64 = 1e-12;

/// `(M + Mᵀ) / 2`. The result is exactly symmetric.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Largest absolute difference between `m` and its transpose.
pub fn asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn matrix_scale(m: &Matrix) -> f64 {
    1.0 + m.norm()
}

pub fn is_psd(m: &Matrix) -> (bool, f64) {
    let lambda = min_eigenvalue(m);
    (lambda >= -PSD_TOL * matrix_scale(m), lambda)
}

pub fn is_pd(m: &Matrix) -> (bool, f64) {
    let lambda = min_eigenvalue(m);
    (lambda >= PD_TOL * matrix_scale(m), lambda)
}

/// Symmetric square root factor `L` with `L Lᵀ = M` for a PSD `M`.
/// Negative eigenvalues within rounding are clamped to zero.
pub fn psd_sqrt(m: &Matrix) -> Matrix {
    let n = m.nrows();
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut l = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        for i in 0..n {
            l[(i, j)] *= s;
        }
    }
    l
}

/// Moore–Penrose pseudo-inverse of a symmetric PSD matrix through its
/// eigendecomposition. Eigenvalues below `rtol · λ_max` are treated as zero.
pub fn pinv_symmetric(m: &Matrix, rtol: f64) -> Matrix {
    let n = m.nrows();
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |acc, l| acc.max(l.abs()));
    let cutoff = rtol * lmax.max(f64::MIN_POSITIVE);
    let mut out = Matrix::zeros(n, n);
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff {
            let v = eig.eigenvectors.column(j);
            out += (v * v.transpose()) / lambda;
        }
    }
    symmetrize(&out)
}

/// Cholesky factor of a symmetric positive-definite kernel, checked against
/// the strict-positivity threshold `1e-12 · (1 + |tr W|)`.
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub fn new(w: &Matrix, which: &'static str, k: usize) -> Result<Self> {
        let lambda_min = min_eigenvalue(w);
        let threshold = PD_TOL * (1.0 + w.trace().abs());
        if !(lambda_min > threshold) {
            return Err(Error::NotPositiveDefinite {
                which,
                k,
                lambda_min,
            });
        }
        let chol = Cholesky::new(symmetrize(w)).ok_or(Error::NotPositiveDefinite {
            which,
            k,
            lambda_min,
        })?;
        Ok(Self { chol })
    }

    pub fn solve(&self, rhs: &Matrix) -> Matrix {
        self.chol.solve(rhs)
    }

    pub fn solve_vec(&self, rhs: &Vector) -> Vector {
        self.chol.solve(rhs)
    }
}

/// Largest entry-wise absolute difference, relative to `1 + max|b|`.
pub fn rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    let scale = 1.0 + b.amax();
    (a - b).amax() / scale
}

pub(crate) fn check_shape(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn check_len(v: &Vector, len: usize, what: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected length {len}, got {}",
            v.len()
        )));
    }
    Ok(())
}

/// `Xᵀ M X` without forming the intermediate twice.
pub(crate) fn congruence(x: &Matrix, m: &Matrix) -> Matrix {
    x.transpose() * (m * x)
}

/// `Xᵀ M Y`.
pub(crate) fn bilinear(x: &Matrix, m: &Matrix, y: &Matrix) -> Matrix {
    x.transpose() * (m * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_is_exact() {
        let m = Matrix::from_row_slice(3, 3, &[1.0, 0.1, 0.3, 0.2, 2.0, 0.7, 0.9, 0.6, 3.0]);
        let s = symmetrize(&m);
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn sqrt_reproduces_psd_matrix() {
        let m = Matrix::from_row_slice(3, 3, &[1.0, 0.2, 0.3, 0.2, 1.0, 0.6, 0.3, 0.6, 1.0]);
        let l = psd_sqrt(&m);
        assert!((&l * l.transpose() - &m).amax() < 1e-14);

        // rank-deficient input
        let v = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let r1 = &v * v.transpose();
        let l = psd_sqrt(&r1);
        assert!((&l * l.transpose() - &r1).amax() < 1e-12);
    }

    #[test]
    fn spd_factor_rejects_indefinite() {
        let w = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            SpdFactor::new(&w, "W1", 3),
            Err(Error::NotPositiveDefinite { k: 3, .. })
        ));
        let w = Matrix::zeros(2, 2);
        assert!(SpdFactor::new(&w, "W1", 0).is_err());
    }

    #[test]
    fn pinv_of_singular_projector() {
        let v = Vector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let p = &v * v.transpose() * 4.0;
        let pi = pinv_symmetric(&p, 1e-12);
        assert!((&pi - &p / 16.0).amax() < 1e-14);
    }
}
