use crate::error::{GeomError, Result};
use crate::linalg::Mat;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor-product quadrature resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub ns: usize,
    pub nt: usize,
}

impl Grid {
    pub fn square(n: usize) -> Self {
        Grid { ns: n, nt: n }
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::square(64)
    }
}

/// Parametrized surface `(s, t) ↦ P(s, t)` over a rectangle.
pub trait Surface: Sync {
    fn domain(&self) -> ((f64, f64), (f64, f64));
    fn point(&self, s: f64, t: f64) -> Vec<f64>;

    /// `(∂_s P, ∂_t P)`; central differences unless overridden.
    fn tangents(&self, s: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 1e-6;
        let d = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(p, q)| (p - q) / (2.0 * h)).collect();
        (d(self.point(s + h, t), self.point(s - h, t)), d(self.point(s, t + h), self.point(s, t - h)))
    }
}

/// `∫ ω(∂_s P, ∂_t P) ds dt` for a two-form field given as an
/// antisymmetric matrix at each point.
pub fn integrate_2form<S, W>(omega: W, surface: &S, grid: Grid) -> Result<f64>
where
    S: Surface,
    W: Fn(&[f64]) -> Result<Mat<f64>> + Sync,
{
    let ((s0, s1), (t0, t1)) = surface.domain();
    let (xs, ws) = gauss_legendre(grid.ns);
    let (xt, wt) = gauss_legendre(grid.nt);
    let (hs, ht) = ((s1 - s0) / 2.0, (t1 - t0) / 2.0);
    let nodes: Vec<(usize, usize)> = (0..grid.ns).flat_map(|a| (0..grid.nt).map(move |b| (a, b))).collect();
    let values: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|&(a, b)| {
            let s = s0 + hs * (xs[a] + 1.0);
            let t = t0 + ht * (xt[b] + 1.0);
            let p = surface.point(s, t);
            let (ps, pt) = surface.tangents(s, t);
            let w = omega(&p)?;
            let v = crate::linalg::dot(&w.mul_vec(&pt), &ps);
            Ok(ws[a] * wt[b] * hs * ht * v)
        })
        .collect();
    let mut total = 0.0;
    for v in values {
        total += v?;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(GeomError::NonFinite { context: "two-form integral" })
    }
}

/// A full affine chart of a complex line: `P = r cos φ · a + r sin φ · b`
/// with `r = tan(χ/2)`, `(χ, φ) ∈ (0, π) × (0, 2π)`, plus a base point.
#[derive(Clone, Debug)]
pub struct LineChart {
    pub base: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Surface for LineChart {
    fn domain(&self) -> ((f64, f64), (f64, f64)) {
        ((0.0, PI), (0.0, 2.0 * PI))
    }

    fn point(&self, chi: f64, phi: f64) -> Vec<f64> {
        let r = (chi / 2.0).tan();
        let (c, s) = (r * phi.cos(), r * phi.sin());
        self.base.iter().zip(&self.a).zip(&self.b).map(|((p, a), b)| p + c * a + s * b).collect()
    }

    fn tangents(&self, chi: f64, phi: f64) -> (Vec<f64>, Vec<f64>) {
        let r = (chi / 2.0).tan();
        let dr = 0.5 / (chi / 2.0).cos().powi(2);
        let (c, s) = (phi.cos(), phi.sin());
        let dchi = self.a.iter().zip(&self.b).map(|(a, b)| dr * (c * a + s * b)).collect();
        let dphi = self.a.iter().zip(&self.b).map(|(a, b)| r * (-s * a + c * b)).collect();
        (dchi, dphi)
    }
}
