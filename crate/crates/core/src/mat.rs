//! Dense matrix kernels: real symmetric and complex Hermitian workhorses.
//!
//! Everything here is sized for desk-scale problems (a few hundred rows).
//! Eigendecompositions use cyclic Jacobi, which is slow in the O() sense but
//! robust and accurate to machine precision at these sizes.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> RMat {
        RMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &RMat) -> RMat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = RMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let lhs = k * other.cols;
                let dst = i * other.cols;
                for j in 0..other.cols {
                    out.data[dst + j] += a * other.data[lhs + j];
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &RMat, s: f64) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| if x.abs() > m { x.abs() } else { m })
    }

    /// (A + Aᵀ)/2, in place.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn dot(&self, other: &RMat) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum()
    }

    /// Lower-triangular Cholesky factor of a symmetric positive definite
    /// matrix. Fails on a non-positive pivot.
    pub fn cholesky(&self) -> Result<RMat, MatError> {
        assert!(self.is_square());
        let n = self.rows;
        let mut l = RMat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(MatError::NotPositiveDefinite { pivot: i, value: s });
                    }
                    l[(i, j)] = libm::sqrt(s);
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Solve L x = b for lower-triangular L (forward substitution).
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows;
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] -= self[(i, k)] * v;
            }
            x[i] /= self[(i, i)];
        }
        x
    }

    /// Solve Lᵀ x = b for lower-triangular L (back substitution).
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rows;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = x[k];
                x[i] -= self[(k, i)] * v;
            }
            x[i] /= self[(i, i)];
        }
        x
    }

    /// Solve (L Lᵀ) x = b given the Cholesky factor L.
    pub fn chol_solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_lower_transpose(&self.solve_lower(b))
    }

    /// X ← L⁻¹ · A, A overwritten column-by-column.
    pub fn solve_lower_mat(&self, a: &RMat) -> RMat {
        let n = self.rows;
        let mut out = a.clone();
        for j in 0..a.cols {
            for i in 0..n {
                let mut s = out[(i, j)];
                for k in 0..i {
                    s -= self[(i, k)] * out[(k, j)];
                }
                out[(i, j)] = s / self[(i, i)];
            }
        }
        out
    }

    /// Eigendecomposition of a symmetric matrix by cyclic Jacobi.
    /// Returns eigenvalues in ascending order with matching eigenvector
    /// columns.
    pub fn eig_sym(&self) -> (Vec<f64>, RMat) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = RMat::identity(n);
        if n <= 1 {
            return (if n == 1 { vec![a[(0, 0)]] } else { vec![] }, v);
        }
        let scale = a.frobenius().max(1e-300);
        for _sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if libm::sqrt(2.0 * off) <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                    } else {
                        -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                    };
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
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
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
        let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
        let vecs = RMat::from_fn(n, n, |i, j| v[(i, order[j])]);
        (vals, vecs)
    }

    /// Smallest eigenvalue of a symmetric matrix.
    pub fn min_eig_sym(&self) -> f64 {
        let (vals, _) = self.eig_sym();
        vals.first().copied().unwrap_or(0.0)
    }
}

impl core::ops::Index<(usize, usize)> for RMat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for RMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(r: &RMat) -> Self {
        CMat::from_fn(r.rows, r.cols, |i, j| Complex64::new(r[(i, j)], 0.0))
    }

    pub fn scalar(z: Complex64) -> Self {
        let mut m = Self::zeros(1, 1);
        m[(0, 0)] = z;
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let lhs = k * other.cols;
                let dst = i * other.cols;
                for j in 0..other.cols {
                    out.data[dst + j] += a * other.data[lhs + j];
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &CMat, s: Complex64) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| {
            let a = z.norm();
            if a > m {
                a
            } else {
                m
            }
        })
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// (A + A*)/2, in place.
    pub fn hermitize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            self[(i, i)] = Complex64::new(self[(i, i)].re, 0.0);
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)].conj());
                self[(i, j)] = v;
                self[(j, i)] = v.conj();
            }
        }
    }

    /// Deviation from Hermitian symmetry, max entry norm of A − A*.
    pub fn herm_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut d = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                let e = (self[(i, j)] - self[(j, i)].conj()).norm();
                if e > d {
                    d = e;
                }
            }
        }
        d
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| if z.im.abs() > m { z.im.abs() } else { m })
    }

    pub fn real_part(&self) -> RMat {
        RMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].re)
    }

    /// Standard real embedding [[Re, −Im], [Im, Re]] of size 2n.
    pub fn realify(&self) -> RMat {
        let (r, c) = (self.rows, self.cols);
        let mut out = RMat::zeros(2 * r, 2 * c);
        for i in 0..r {
            for j in 0..c {
                let z = self[(i, j)];
                out[(i, j)] = z.re;
                out[(i, j + c)] = -z.im;
                out[(i + r, j)] = z.im;
                out[(i + r, j + c)] = z.re;
            }
        }
        out
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi with complex
    /// rotations. Returns ascending eigenvalues and unitary eigenvector
    /// columns.
    pub fn eig_herm(&self) -> (Vec<f64>, CMat) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        a.hermitize();
        let mut v = CMat::identity(n);
        if n <= 1 {
            return (if n == 1 { vec![a[(0, 0)].re] } else { vec![] }, v);
        }
        let scale = a.frobenius().max(1e-300);
        for _sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if libm::sqrt(2.0 * off) <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag <= 1e-300 {
                        continue;
                    }
                    let u = apq / mag;
                    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                    } else {
                        -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                    };
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = t * c;
                    // unitary J: J_pp = c, J_pq = s·u, J_qp = −s·ū, J_qq = c
                    let su = Complex64::new(s, 0.0) * u;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - su.conj() * akq;
                        a[(k, q)] = su * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - su * aqk;
                        a[(q, k)] = su.conj() * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - su.conj() * vkq;
                        v[(k, q)] = su * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
        let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
        let vecs = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
        (vals, vecs)
    }
}

impl core::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatError {
    NotPositiveDefinite { pivot: usize, value: f64 },
}

impl core::fmt::Display for MatError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MatError::NotPositiveDefinite { pivot, value } => {
                write!(f, "matrix not positive definite (pivot {pivot} = {value:e})")
            }
        }
    }
}

impl core::error::Error for MatError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_real_known_spectrum() {
        // [[1,2],[2,1]] has eigenvalues -1 and 3
        let mut m = RMat::zeros(2, 2);
        m[(0, 0)] = 1.0;
        m[(0, 1)] = 2.0;
        m[(1, 0)] = 2.0;
        m[(1, 1)] = 1.0;
        let (vals, vecs) = m.eig_sym();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // eigenvector residual
        for j in 0..2 {
            for i in 0..2 {
                let mut r = -vals[j] * vecs[(i, j)];
                for k in 0..2 {
                    r += m[(i, k)] * vecs[(k, j)];
                }
                assert!(r.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_complex_known_spectrum() {
        // [[0, i], [-i, 0]] has eigenvalues ±1
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, -1.0);
        let (vals, _) = m.eig_herm();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_round_trip() {
        let mut m = RMat::zeros(3, 3);
        // A = B Bᵀ + I for a fixed B
        let b = RMat::from_fn(3, 3, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let bt = b.transpose();
        let prod = b.matmul(&bt);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = prod[(i, j)] + if i == j { 1.0 } else { 0.0 };
            }
        }
        let l = m.cholesky().unwrap();
        let recon = l.matmul(&l.transpose());
        for i in 0..3 {
            for j in 0..3 {
                assert!((recon[(i, j)] - m[(i, j)]).abs() < 1e-12);
            }
        }
        let x = l.chol_solve(&[1.0, 2.0, 3.0]);
        // residual check
        for i in 0..3 {
            let mut r = -[1.0, 2.0, 3.0][i];
            for k in 0..3 {
                r += m[(i, k)] * x[k];
            }
            assert!(r.abs() < 1e-10);
        }
    }

    #[test]
    fn realify_spectrum_doubles() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, -1.0);
        let r = m.realify();
        let (vals, _) = r.eig_sym();
        assert_eq!(vals.len(), 4);
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12 && (vals[3] - 1.0).abs() < 1e-12);
    }
}
