//! Small dense linear algebra: a row-major square matrix, Cholesky
//! factorization and a cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Dimensions in this crate are the covariate count plus one, so everything
//! here is written for matrices of at most a few hundred rows.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{check_dim, invalid, Error, Result};

/// Relative Frobenius asymmetry above which a matrix is rejected as
/// non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(dim * dim, data.len())?;
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            check_dim(dim, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics
        self.data.chunks_exact(self.dim.max(1)).take(self.dim)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `y = self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.rows().map(|row| dot(row, x)).collect())
    }

    /// `xᵀ · self · x`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        let y = self.mul_vec(x)?;
        Ok(dot(x, &y))
    }

    pub fn matmul(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> SquareMatrix {
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Replaces the matrix with `(M + Mᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// `self += scale · v vᵀ`.
    pub fn add_scaled_outer(&mut self, scale: f64, v: &[f64]) -> Result<()> {
        check_dim(self.dim, v.len())?;
        let n = self.dim;
        for i in 0..n {
            let si = scale * v[i];
            let row = &mut self.data[i * n..(i + 1) * n];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += si * vj;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn sub(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        check_dim(self.dim, other.dim)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(SquareMatrix { dim: self.dim, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// `‖M − Mᵀ‖_F / ‖M‖_F`, zero for the zero matrix.
    pub fn relative_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut diff = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self[(i, j)] - self[(j, i)];
                diff += 2.0 * d * d;
            }
        }
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            0.0
        } else {
            libm::sqrt(diff) / norm
        }
    }

    pub fn check_symmetric(&self) -> Result<()> {
        let asymmetry = self.relative_asymmetry();
        if asymmetry > SYMMETRY_TOL || asymmetry.is_nan() {
            Err(Error::NotSymmetric { asymmetry })
        } else {
            Ok(())
        }
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: SquareMatrix,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// of `m` is read.
    pub fn factor(m: &SquareMatrix) -> Result<Self> {
        let n = m.dim();
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut diag = m[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let ljj = libm::sqrt(diag);
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &SquareMatrix {
        &self.lower
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lower.dim();
        check_dim(n, b.len())?;
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> SquareMatrix {
        let n = self.lower.dim();
        let mut inv = SquareMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e).expect("dimension checked");
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv.symmetrize();
        inv
    }
}

/// Inverse of a symmetric positive definite matrix through its Cholesky
/// factor.
pub fn direct_inverse(m: &SquareMatrix) -> Result<SquareMatrix> {
    m.check_symmetric()?;
    Ok(Cholesky::factor(m)?.inverse())
}

/// All eigenvalues of a symmetric matrix, in descending order.
///
/// Cyclic Jacobi rotations; converges quadratically and keeps small
/// eigenvalues of graded matrices to high relative accuracy.
pub fn symmetric_eigenvalues(m: &SquareMatrix) -> Result<Vec<f64>> {
    m.check_symmetric()?;
    if !m.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    let n = m.dim();
    let mut a = m.clone();
    a.symmetrize();

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off == 0.0 {
            break;
        }
        let diag_scale: f64 = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= 1e-32 * diag_scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::hypot(1.0, theta));
                let c = 1.0 / libm::hypot(1.0, t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    let mut eig = a.diagonal();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn extreme_eigenvalues(m: &SquareMatrix) -> Result<(f64, f64)> {
    if m.dim() == 0 {
        return Err(invalid("empty matrix has no eigenvalues"));
    }
    let eig = symmetric_eigenvalues(m)?;
    Ok((eig[eig.len() - 1], eig[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_of_identity_and_diagonal() {
        assert_eq!(direct_inverse(&SquareMatrix::identity(4)).unwrap(), SquareMatrix::identity(4));
        let inv = direct_inverse(&SquareMatrix::from_diagonal(&[2.0, 4.0])).unwrap();
        let expected = SquareMatrix::from_diagonal(&[0.5, 0.25]);
        for (a, b) in inv.as_slice().iter().zip(expected.as_slice()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-15);
        }
    }

    #[test]
    fn inverse_rejects_indefinite() {
        let m = SquareMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(direct_inverse(&m), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn eigenvalues_of_small_matrices() {
        let (lo, hi) = extreme_eigenvalues(&SquareMatrix::from_diagonal(&[1.0, 3.0, 7.0])).unwrap();
        assert_eq!((lo, hi), (1.0, 7.0));
        assert_eq!(extreme_eigenvalues(&SquareMatrix::identity(3)).unwrap(), (1.0, 1.0));
        // roots of (2 - x)^2 - 1
        let (lo, hi) = extreme_eigenvalues(&SquareMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap()).unwrap();
        assert_relative_eq!(lo, 1.0, max_relative = 1e-12);
        assert_relative_eq!(hi, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let m = SquareMatrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert!(matches!(extreme_eigenvalues(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn cholesky_solve_matches_multiplication() {
        let m = SquareMatrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]]).unwrap();
        let x = [1.0, -2.0, 0.5];
        let b = m.mul_vec(&x).unwrap();
        let sol = Cholesky::factor(&m).unwrap().solve(&b).unwrap();
        for (s, e) in sol.iter().zip(x) {
            assert_relative_eq!(*s, e, epsilon = 1e-14);
        }
    }
}
