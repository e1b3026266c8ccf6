//! Quaternions, quaternionic vectors and their real and complex coordinates.
//!
//! Coefficients are ordered `(1, i, j, k)` and a vector in ℍⁿ is embedded in
//! ℝ^{4n} by interleaving those four coefficients entry by entry. The complex
//! splitting writes every entry as `u + j·w` with `u, w ∈ ℂ`, so that
//! `e^{iθ}(u + jw) = e^{iθ}u + j e^{-iθ}w`.

use crate::linalg::Mat;
use crate::scalar::Scalar;
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

pub type Q64 = Quat<f64>;

impl<T: Scalar> Quat<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Quat { w, x, y, z }
    }
    pub fn zero() -> Self {
        Quat::new(T::zero(), T::zero(), T::zero(), T::zero())
    }
    pub fn one() -> Self {
        Quat::new(T::one(), T::zero(), T::zero(), T::zero())
    }
    pub fn from_slice(s: &[T]) -> Self {
        Quat::new(s[0], s[1], s[2], s[3])
    }
    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }
    pub fn conj(self) -> Self {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }
    pub fn norm_sq(self) -> T {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }
    pub fn scale(self, s: T) -> Self {
        Quat::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
    pub fn inverse(self) -> Self {
        self.conj().scale(self.norm_sq().recip())
    }
    /// Real part of `conj(self) · other`, the Euclidean inner product on ℝ⁴.
    pub fn real_dot(self, o: Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// 4×4 real matrix of `q ↦ self · q`.
    pub fn left_matrix(self) -> Mat<T> {
        let cols: Vec<Vec<T>> = basis::<T>().iter().map(|&e| (self * e).to_array().to_vec()).collect();
        Mat::from_columns(&cols)
    }

    /// 4×4 real matrix of `q ↦ q · self`.
    pub fn right_matrix(self) -> Mat<T> {
        let cols: Vec<Vec<T>> = basis::<T>().iter().map(|&e| (e * self).to_array().to_vec()).collect();
        Mat::from_columns(&cols)
    }
}

impl Q64 {
    pub const I: Q64 = Quat { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };
    pub const J: Q64 = Quat { w: 0.0, x: 0.0, y: 1.0, z: 0.0 };
    pub const K: Q64 = Quat { w: 0.0, x: 0.0, y: 0.0, z: 1.0 };

    pub fn lift<T: Scalar>(self) -> Quat<T> {
        Quat::new(T::cst(self.w), T::cst(self.x), T::cst(self.y), T::cst(self.z))
    }

    /// Unit quaternion `exp(t·a)` for a unit imaginary `a`.
    pub fn exp_imag(a: Q64, t: f64) -> Q64 {
        Quat::new(t.cos(), 0.0, 0.0, 0.0) + a.scale(t.sin())
    }

    /// Split as `u + j·w`.
    pub fn split(self) -> (Complex64, Complex64) {
        // j(a + bi) = aj - bk
        (Complex64::new(self.w, self.x), Complex64::new(self.y, -self.z))
    }

    pub fn recompose(u: Complex64, w: Complex64) -> Q64 {
        Quat::new(u.re, u.im, w.re, -w.im)
    }
}

/// The imaginary units `(i, j, k)`.
pub const UNITS: [Q64; 3] = [Q64::I, Q64::J, Q64::K];

fn basis<T: Scalar>() -> [Quat<T>; 4] {
    let (o, z) = (T::one(), T::zero());
    [Quat::new(o, z, z, z), Quat::new(z, o, z, z), Quat::new(z, z, o, z), Quat::new(z, z, z, o)]
}

/// Hamilton product.
pub fn qmul<T: Scalar>(p: Quat<T>, q: Quat<T>) -> Quat<T> {
    Quat::new(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )
}

impl<T: Scalar> Mul for Quat<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        qmul(self, o)
    }
}
impl<T: Scalar> Add for Quat<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Quat::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}
impl<T: Scalar> Sub for Quat<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Quat::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}
impl<T: Scalar> Neg for Quat<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Quat::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// A vector in ℍⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct HVec<T> {
    pub entries: Vec<Quat<T>>,
}

impl<T: Scalar> HVec<T> {
    pub fn new(entries: Vec<Quat<T>>) -> Self {
        HVec { entries }
    }
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Interleaved real coordinates `(w,x,y,z)` per entry.
    pub fn embed_real(&self) -> Vec<T> {
        self.entries.iter().flat_map(|q| q.to_array()).collect()
    }

    /// Inverse of [`HVec::embed_real`].
    pub fn from_real(x: &[T]) -> Self {
        assert_eq!(x.len() % 4, 0, "real length must be a multiple of 4");
        HVec { entries: x.chunks(4).map(Quat::from_slice).collect() }
    }

    /// `self · a`, right scalar multiplication.
    pub fn right_mul(&self, a: Quat<T>) -> Self {
        HVec { entries: self.entries.iter().map(|&q| q * a).collect() }
    }

    /// Quaternionic Hermitian product `Σ conj(a_l) b_l`, right-linear in `b`.
    pub fn hermitian(&self, other: &Self) -> Quat<T> {
        self.entries.iter().zip(&other.entries).fold(Quat::zero(), |acc, (&a, &b)| acc + a.conj() * b)
    }

    pub fn norm_sq(&self) -> T {
        self.entries.iter().map(|q| q.norm_sq()).sum()
    }
}

impl HVec<f64> {
    /// Entrywise `u + j·w` splitting.
    pub fn split_complex(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        self.entries.iter().map(|q| q.split()).unzip()
    }

    pub fn recompose(u: &[Complex64], w: &[Complex64]) -> Self {
        assert_eq!(u.len(), w.len(), "length mismatch");
        HVec { entries: u.iter().zip(w).map(|(&a, &b)| Q64::recompose(a, b)).collect() }
    }
}

/// Block-diagonal real matrix of right multiplication by `a` on ℍⁿ.
pub fn right_mult_block<T: Scalar>(a: Quat<T>, n: usize) -> Mat<T> {
    let r = a.right_matrix();
    let mut m = Mat::zeros(4 * n, 4 * n);
    for b in 0..n {
        for i in 0..4 {
            for j in 0..4 {
                m[(4 * b + i, 4 * b + j)] = r[(i, j)];
            }
        }
    }
    m
}

/// The flat quaternionic frame on ℍⁿ: right multiplication by the
/// conjugate units, which satisfies `I₁I₂ = I₃` (plain right multiplication
/// reverses the order of products).
pub fn flat_frame(n: usize) -> [Mat<f64>; 3] {
    UNITS.map(|u| right_mult_block(u.conj(), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q() -> impl Strategy<Value = Q64> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c, d)| Quat::new(a, b, c, d))
    }

    #[test]
    fn defining_relations() {
        assert_eq!(Q64::I * Q64::J, Q64::K);
        assert_eq!(Q64::J * Q64::K, Q64::I);
        assert_eq!(Q64::K * Q64::I, Q64::J);
        for u in UNITS {
            assert_eq!(u * u, -Q64::one());
        }
        let p = Quat::new(0.3, -1.0, 2.0, 0.5);
        assert_eq!(Q64::one() * p, p);
    }

    #[test]
    fn conjugate_right_multiplications_form_a_frame() {
        let [a, b, c] = flat_frame(2);
        let id = Mat::<f64>::identity(8);
        assert_eq!(&a * &b, c);
        assert_eq!(&b * &c, a);
        assert_eq!(&c * &a, b);
        assert_eq!(&a * &a, -&id);
        // plain right multiplication is an anti-representation
        let (ri, rj, rk) = (Q64::I.right_matrix(), Q64::J.right_matrix(), Q64::K.right_matrix());
        assert_eq!(&ri * &rj, -&rk);
    }

    #[test]
    fn split_examples() {
        let v = HVec::new(vec![Q64::one()]);
        let (u, w) = v.split_complex();
        assert_eq!((u[0], w[0]), (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
        let v = HVec::new(vec![Q64::J; 3]);
        let (u, w) = v.split_complex();
        assert!(u.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
        assert!(w.iter().all(|c| *c == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn embedding_examples() {
        let v = HVec::new(vec![Q64::one(), Q64::zero()]);
        assert_eq!(v.embed_real(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(HVec::<f64>::new(vec![Q64::zero(); 2]).embed_real().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn splitting_respects_circle_action() {
        // e^{iθ}(u + jw) = e^{iθ}u + j e^{-iθ}w
        let t = 0.8_f64;
        let z = Quat::new(0.2, -0.4, 1.1, 0.7);
        let (u, w) = z.split();
        let rot = Q64::exp_imag(Q64::I, t) * z;
        let (u2, w2) = rot.split();
        let e = Complex64::from_polar(1.0, t);
        assert!((u2 - e * u).norm() < 1e-15);
        assert!((w2 - e.conj() * w).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(p in q(), r in q()) {
            // oracle: determinant-free norm via the left regular representation
            let m = p.left_matrix();
            let image = m.mul_vec(&r.to_array());
            let oracle = image.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(((p * r).norm() - p.norm() * r.norm()).abs() < 1e-14 * (1.0 + p.norm() * r.norm()));
            prop_assert!(((p * r).norm() - oracle).abs() < 1e-13 * (1.0 + oracle));
        }

        #[test]
        fn product_is_associative(p in q(), r in q(), s in q()) {
            let d = (p * r) * s - p * (r * s);
            prop_assert!(d.norm() < 1e-14 * (1.0 + p.norm() * r.norm() * s.norm()));
        }

        #[test]
        fn split_round_trip_is_exact(a in q(), b in q()) {
            let v = HVec::new(vec![a, b]);
            let (u, w) = v.split_complex();
            prop_assert_eq!(HVec::recompose(&u, &w), v.clone());
            prop_assert_eq!(HVec::from_real(&v.embed_real()), v);
        }

        #[test]
        fn inverse_is_two_sided(p in q()) {
            prop_assume!(p.norm() > 1e-3);
            let e = p * p.inverse() - Q64::one();
            prop_assert!(e.norm() < 1e-14);
        }
    }
}
