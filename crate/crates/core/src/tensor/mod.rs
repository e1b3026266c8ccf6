//! Chart-level tensor calculus.
//!
//! A [`Field`] is any map from chart coordinates to a flat array of
//! components, evaluated generically over [`Scalar`]. Vector fields return
//! `dim` components, endomorphism fields `dim²` in row-major order
//! (`A[i][j]` is the `e_i` component of `A e_j`), Christoffel symbols `dim³`.
//! A [`DerivEngine`] differentiates any field along a direction, either by
//! central differences or by evaluating it at dual numbers.

mod connection;
mod quadrature;

pub use connection::*;
pub use quadrature::*;

use crate::error::{GeomError, Result};
use crate::linalg::Mat;
use crate::scalar::{Dual, Scalar};
use std::fmt;
use std::sync::Arc;

/// Coordinate patch with an optional domain predicate.
type DomainPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct Chart {
    pub dim: usize,
    pub label: String,
    domain: Option<DomainPredicate>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

impl Chart {
    /// Quaternionic chart; `dim` must be a multiple of 4.
    pub fn new(dim: usize, label: impl Into<String>) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(4) {
            return Err(GeomError::InvalidDimension { dim, reason: "quaternionic charts need dim ≡ 0 mod 4" });
        }
        Ok(Chart { dim, label: label.into(), domain: None })
    }

    /// Chart on a submanifold of any even dimension (complex curves and
    /// fixed-point components).
    pub fn submanifold(dim: usize, label: impl Into<String>) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(GeomError::InvalidDimension { dim, reason: "submanifold charts need even dim" });
        }
        Ok(Chart { dim, label: label.into(), domain: None })
    }

    pub fn with_domain(mut self, pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Arc::new(pred));
        self
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.domain.as_ref().is_none_or(|p| p(x))
    }
}

/// Flat-component field on a chart, evaluable at any scalar type.
pub trait Field: Sync {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T>;
}

impl<F: Field> Field for &F {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        (**self).eval(x)
    }
}

/// Constant field, mostly for tests and as a building block.
#[derive(Clone, Debug)]
pub struct ConstField(pub Vec<f64>);

impl Field for ConstField {
    fn eval<T: Scalar>(&self, _x: &[T]) -> Vec<T> {
        self.0.iter().map(|&v| T::cst(v)).collect()
    }
}

/// How directional derivatives are taken.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum DerivEngine {
    /// Second-order central differences with step `h·(1 + |x|)`.
    CentralFd { h: f64 },
    /// Forward-mode dual numbers; exact up to rounding.
    #[default]
    Dual,
}

impl DerivEngine {
    pub const FD_STEP: f64 = 1e-5;
    pub const FD_CURVATURE_STEP: f64 = 1e-4;

    pub fn fd() -> Self {
        DerivEngine::CentralFd { h: Self::FD_STEP }
    }

    fn step(h: f64, x: &[f64]) -> f64 {
        h * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `d/dt f(x + tY)` at `t = 0`.
    pub fn deriv<F: Field, T: Scalar>(&self, f: &F, x: &[T], y: &[T]) -> Vec<T> {
        match *self {
            DerivEngine::Dual => {
                let xs: Vec<Dual<T>> = x.iter().zip(y).map(|(&a, &b)| Dual::new(a, b)).collect();
                f.eval(&xs).into_iter().map(|d| d.eps).collect()
            }
            DerivEngine::CentralFd { h } => {
                let hh = Self::step(h, &crate::scalar::values(x));
                let xp: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a + b * hh).collect();
                let xm: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b * hh).collect();
                let (fp, fm) = (f.eval(&xp), f.eval(&xm));
                fp.into_iter().zip(fm).map(|(p, m)| (p - m) / (2.0 * hh)).collect()
            }
        }
    }

    /// Derivatives along every coordinate direction, `out[i] = ∂_i f`.
    pub fn partials<F: Field, T: Scalar>(&self, f: &F, x: &[T]) -> Vec<Vec<T>> {
        (0..x.len()).map(|i| self.deriv(f, x, &unit::<T>(x.len(), i))).collect()
    }

    /// Points the stencil touches when differentiating at `x` along `y`.
    pub fn stencil(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
        match *self {
            DerivEngine::Dual => vec![x.to_vec()],
            DerivEngine::CentralFd { h } => {
                let hh = Self::step(h, x);
                vec![x.iter().zip(y).map(|(a, b)| a + hh * b).collect(), x.iter().zip(y).map(|(a, b)| a - hh * b).collect()]
            }
        }
    }

    /// Error if any stencil point lies outside the chart.
    pub fn check_stencil(&self, chart: &Chart, x: &[f64], y: &[f64]) -> Result<()> {
        for p in self.stencil(x, y) {
            if !chart.contains(&p) {
                return Err(GeomError::StencilOutOfDomain { point: p });
            }
        }
        Ok(())
    }
}

/// Standard basis vector.
pub fn unit<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    v[i] = T::one();
    v
}

/// Directional derivative of a field at `x` along `y`.
pub fn directional_deriv<F: Field>(f: &F, x: &[f64], y: &[f64], engine: DerivEngine, chart: &Chart) -> Result<Vec<f64>> {
    engine.check_stencil(chart, x, y)?;
    let out = engine.deriv(f, x, y);
    finite(out, "directional derivative")
}

pub(crate) fn finite(v: Vec<f64>, context: &'static str) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(GeomError::NonFinite { context })
    }
}

/// Reshape flat endomorphism components.
pub fn as_mat<T: Scalar>(flat: Vec<T>, n: usize) -> Mat<T> {
    Mat::from_vec(n, n, flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct NormSq;
    impl Field for NormSq {
        fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
            vec![x.iter().map(|&v| v * v).sum()]
        }
    }

    struct Linear(Vec<f64>);
    impl Field for Linear {
        fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
            vec![x.iter().zip(&self.0).map(|(&v, &a)| v * a).sum()]
        }
    }

    fn chart() -> Chart {
        Chart::new(4, "R4").unwrap()
    }

    #[test]
    fn derivative_examples() {
        for engine in [DerivEngine::fd(), DerivEngine::Dual] {
            let x = [1.0, 0.0, 0.0, 0.0];
            let d = directional_deriv(&NormSq, &x, &x, engine, &chart()).unwrap();
            assert!((d[0] - 2.0).abs() < 1e-9, "{engine:?}");
            let c = directional_deriv(&ConstField(vec![3.0]), &x, &[0.2, 1.0, -1.0, 4.0], engine, &chart()).unwrap();
            assert!(c[0].abs() < 1e-12);
            let a = vec![0.5, -2.0, 1.0, 3.0];
            let y = [0.1, 0.2, -0.7, 1.3];
            let l = directional_deriv(&Linear(a.clone()), &[0.3, 2.0, -1.0, 0.4], &y, engine, &chart()).unwrap();
            let expect: f64 = a.iter().zip(&y).map(|(p, q)| p * q).sum();
            assert!((l[0] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn central_differences_exact_on_quadratics() {
        let x = [0.3, -1.2, 2.0, 0.7];
        let y = [1.0, 0.5, -0.25, 2.0];
        let d = DerivEngine::fd().deriv(&NormSq, &x, &y);
        let exact: f64 = 2.0 * x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        assert!((d[0] - exact).abs() < 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn stencil_outside_domain_is_rejected() {
        let ball = chart().with_domain(|x| x.iter().map(|v| v * v).sum::<f64>() < 1.0);
        let edge = [1.0 - 1e-7, 0.0, 0.0, 0.0];
        let r = directional_deriv(&NormSq, &edge, &[1.0, 0.0, 0.0, 0.0], DerivEngine::fd(), &ball);
        assert!(matches!(r, Err(GeomError::StencilOutOfDomain { .. })));
        assert!(directional_deriv(&NormSq, &edge, &[1.0, 0.0, 0.0, 0.0], DerivEngine::Dual, &ball).is_ok());
    }

    #[test]
    fn chart_dimension_invariant() {
        assert!(Chart::new(6, "bad").is_err());
        assert!(Chart::submanifold(2, "line").is_ok());
    }
}
