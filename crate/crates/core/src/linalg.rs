//! Small dense matrices over any [`Scalar`].
//!
//! Only what the geometry needs: products, commutators, traces and a pivoted
//! Gauss-Jordan inverse that stays differentiable through dual numbers.
//! Decompositions (SVD, eigen, polar) are done at `f64` with nalgebra.

use crate::error::GeomError;
use crate::scalar::Scalar;
use nalgebra::DMatrix;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Mat { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let rows = cols.first().map_or(0, |c| c.len());
        Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: T) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn scale_f(&self, s: f64) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "shape mismatch");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(&a, &b)| a * b).sum()
            })
            .collect()
    }

    /// `self · other − other · self`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Trace of the product without forming it.
    pub fn trace_of_product(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Frobenius norm of the value parts.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.re() * v.re()).sum::<f64>().sqrt()
    }

    pub fn values(&self) -> Mat<f64> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.re()).collect() }
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting on value parts.
    pub fn inverse(&self) -> Result<Self, GeomError> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        let scale = self.data.iter().map(|v| v.re().abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for col in 0..n {
            let piv = (col..n).max_by(|&r, &s| a[(r, col)].re().abs().total_cmp(&a[(s, col)].re().abs())).expect("non-empty range");
            if a[(piv, col)].re().abs() <= 1e-14 * scale {
                return Err(GeomError::Singular);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let p = a[(col, col)].recip();
            for j in 0..n {
                a[(col, j)] *= p;
                inv[(col, j)] *= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                for j in 0..n {
                    let t = a[(col, j)];
                    a[(r, j)] -= f * t;
                    let t = inv[(col, j)];
                    inv[(r, j)] -= f * t;
                }
            }
        }
        Ok(inv)
    }
}

impl Mat<f64> {
    pub fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_na(m: &DMatrix<f64>) -> Self {
        Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn lift<T: Scalar>(&self) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| T::cst(v)).collect() }
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, o: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, o.rows, "shape mismatch");
        let mut out = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..o.cols {
                    out.data[i * o.cols + j] += a * o.data[k * o.cols + j];
                }
            }
        }
        out
    }
}

impl<T: Scalar> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<T: Scalar> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, o: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<T: Scalar> Neg for &Mat<T> {
    type Output = Mat<T>;
    fn neg(self) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| -a).collect() }
    }
}

/// Euclidean dot product.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm of value parts.
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn axpy<T: Scalar>(a: T, x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(&xi, &yi)| a * xi + yi).collect()
}

/// Numerical rank: singular values above `tol` times the largest.
pub fn rank(m: &Mat<f64>, tol: f64) -> usize {
    let sv = m.to_na().singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// Orthonormal basis (columns) for the column span of `m`, via SVD.
pub fn column_space(m: &Mat<f64>, tol: f64) -> Mat<f64> {
    let svd = m.to_na().svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol * top).collect();
    Mat::from_fn(m.rows, keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis (columns) for the null space of `m`, via SVD.
pub fn null_space(m: &Mat<f64>, tol: f64) -> Mat<f64> {
    let na = m.to_na();
    // pad to square so V is complete
    let n = m.cols;
    let padded = if m.rows < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.rows, n)).copy_from(&na);
        p
    } else {
        na
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let null: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= tol * top).collect();
    Mat::from_fn(n, null.len(), |i, j| vt[(null[j], i)])
}

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns, measured in the Euclidean product.
pub fn principal_angles(a: &Mat<f64>, b: &Mat<f64>) -> Vec<f64> {
    let c = &a.transpose() * b;
    let mut s: Vec<f64> = c.to_na().singular_values().iter().map(|&v| v.clamp(-1.0, 1.0).acos()).collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Nearest rotation to `m` (polar factor with `det = +1`).
pub fn polar_rotation(m: &Mat<f64>) -> Mat<f64> {
    let svd = m.to_na().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut d = DMatrix::<f64>::identity(m.rows, m.cols);
    if (&u * &vt).determinant() < 0.0 {
        let last = m.rows - 1;
        d[(last, last)] = -1.0;
    }
    Mat::from_na(&(u * d * vt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = Mat::from_vec(3, 3, vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let inv = m.inverse().unwrap();
        let e = &(&m * &inv) - &Mat::identity(3);
        assert!(e.max_abs() < 1e-14);
    }

    #[test]
    fn inverse_derivative_matches_identity() {
        // d(A^-1) = -A^-1 dA A^-1
        let a = Mat::from_vec(2, 2, vec![2.0, 1.0, 0.5, 3.0]);
        let da = Mat::from_vec(2, 2, vec![0.3, -1.0, 0.2, 0.7]);
        let ad = Mat::from_fn(2, 2, |i, j| Dual::new(a[(i, j)], da[(i, j)]));
        let inv = ad.inverse().unwrap();
        let ai = a.inverse().unwrap();
        let expect = (&(&ai * &da) * &ai).scale(-1.0);
        for k in 0..4 {
            assert!((inv.data[k].eps - expect.data[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = Mat::from_vec(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(m.inverse(), Err(GeomError::Singular)));
    }

    #[test]
    fn polar_rotation_recovers_rotation() {
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let r = Mat::from_vec(3, 3, vec![c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let noisy = &r.scale_f(2.0) + &Mat::from_vec(3, 3, vec![1e-3; 9]);
        let p = polar_rotation(&noisy);
        assert!((&p - &r).max_abs() < 1e-3);
    }

    #[test]
    fn null_space_of_projector() {
        let m = Mat::from_vec(2, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.cols, 1);
        assert!((ns[(2, 0)].abs() - 1.0).abs() < 1e-12);
    }
}
