//! Quotients of the zero set of the uniform twistor map.
//!
//! For weights `(1, …, 1)` the zero set `ᵗuv = 0, ‖u‖ = ‖v‖` modulo the
//! circle is `Gr(2, n+1)`: the class of `u + j·v` is the plane spanned by
//! `u` and `v̄`. All checks run upstairs with orbit-aware comparisons.

use crate::error::{GeomError, Result};
use crate::hpn::{line_distance, CircleAction};
use crate::linalg::{self, Mat};
use crate::quat::HVec;
use crate::swann::{classify, SpherePoint, ZeroSetLabel};
use crate::tensor::Field;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which pairing `⟨z, w⟩` the cotangent constraint uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// `ᵗzw = Σ z_l w_l`, which is what makes `ι` land on the zero set.
    #[default]
    Bilinear,
    /// `Σ z̄_l w_l`, kept for comparison.
    Hermitian,
}

impl Pairing {
    pub fn eval(self, z: &[Complex64], w: &[Complex64]) -> Complex64 {
        match self {
            Pairing::Bilinear => z.iter().zip(w).map(|(a, b)| a * b).sum(),
            Pairing::Hermitian => z.iter().zip(w).map(|(a, b)| a.conj() * b).sum(),
        }
    }
}

/// `(‖u₀‖² − ‖v₀‖², Re 2i u₀v₀, Im 2i u₀v₀)`, unnormalized.
///
/// Only the combination `μ̂°₂ + iμ̂°₃ = 2i u₀v₀` is fixed; the split into
/// real and imaginary parts is the convention here. It equals `r²` times
/// the lifted twistor map of weights `(1, 0, …, 0)` with the second
/// component negated.
pub fn mu_circ_hat(z: &SpherePoint) -> [f64; 3] {
    let (u, v) = (z.u[0], z.v[0]);
    let c = Complex64::i() * u * v * 2.0;
    [u.norm_sqr() - v.norm_sqr(), c.re, c.im]
}

/// Residuals of the symmetry of `μ̂°`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Covariance {
    /// `|μ̂°(e^{iθ}·z) − μ̂°(z)|` under the uniform left action.
    pub left: f64,
    /// `|μ̂°(z·e^{it}) − R(2t) μ̂°(z)|` under the right fiber circle.
    pub fiber: f64,
}

impl Covariance {
    pub fn max(&self) -> f64 {
        self.left.max(self.fiber)
    }
}

pub fn mu_circ_covariance(z: &SpherePoint, theta: f64, t: f64) -> Covariance {
    let base = mu_circ_hat(z);
    let moved = SpherePoint::from_hvec(&CircleAction::uniform(z.u.len() - 1).act(theta, &z.to_hvec()));
    let left = linalg::norm(&sub(&mu_circ_hat(&moved), &base));
    let e = Complex64::from_polar(1.0, t);
    let turned = SpherePoint::new(z.u.iter().map(|a| a * e).collect(), z.v.iter().map(|a| a * e).collect());
    let (c, s) = ((2.0 * t).cos(), (2.0 * t).sin());
    let expected = [base[0], c * base[1] - s * base[2], s * base[1] + c * base[2]];
    let fiber = linalg::norm(&sub(&mu_circ_hat(&turned), &expected));
    Covariance { left, fiber }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// A point of `Gr(2, n+1)` represented on the zero set.
#[derive(Clone, Debug, PartialEq)]
pub struct GrPoint {
    pub rep: SpherePoint,
}

impl GrPoint {
    /// Checks `|ᵗuv| < 1e-10 r²` and `|‖u‖ − ‖v‖| < 1e-10 r`.
    pub fn new(rep: SpherePoint) -> Result<Self> {
        let w = classify(&rep, 1e-10);
        if w.label != ZeroSetLabel::OnZeroSet {
            return Err(GeomError::InvariantViolation { what: "representative on the zero set", residual: w.pairing.max(w.gap.abs()) });
        }
        Ok(GrPoint { rep })
    }

    /// Representative of a plane from any basis of it.
    pub fn from_plane(a: &[Complex64], b: &[Complex64]) -> Result<Self> {
        let [a, b] = orthonormal_pair(a, b).ok_or(GeomError::FrameDegenerate)?;
        GrPoint::new(SpherePoint::new(a, b.iter().map(|c| c.conj()).collect()))
    }

    /// Orthonormal basis `(u/‖u‖, v̄/‖v‖)` of the plane.
    pub fn plane(&self) -> [Vec<Complex64>; 2] {
        let (a, b) = (self.rep.u_norm(), self.rep.v_norm());
        [self.rep.u.iter().map(|c| c / a).collect(), self.rep.v.iter().map(|c| c.conj() / b).collect()]
    }

    /// Orthogonal projector onto the plane, row-major.
    pub fn projector(&self) -> Vec<Complex64> {
        projector(&self.plane())
    }
}

fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn orthonormal_pair(a: &[Complex64], b: &[Complex64]) -> Option<[Vec<Complex64>; 2]> {
    let na = cnorm(a);
    if na < 1e-300 {
        return None;
    }
    let a: Vec<Complex64> = a.iter().map(|c| c / na).collect();
    let c = hdot(&a, b);
    let b: Vec<Complex64> = b.iter().zip(&a).map(|(y, x)| y - c * x).collect();
    let nb = cnorm(&b);
    if nb < 1e-12 * na {
        return None;
    }
    Some([a, b.iter().map(|c| c / nb).collect()])
}

fn projector(basis: &[Vec<Complex64>]) -> Vec<Complex64> {
    let m = basis[0].len();
    let mut p = vec![Complex64::new(0.0, 0.0); m * m];
    for q in basis {
        for i in 0..m {
            for j in 0..m {
                p[i * m + j] += q[i] * q[j].conj();
            }
        }
    }
    p
}

/// `(I − Π) A Π` flattened to reals, for `A = diag(p)`.
fn invariance_residual(basis: &[Vec<Complex64>; 2], weights: &[f64]) -> Vec<f64> {
    let m = weights.len();
    let p = projector(basis);
    let mut out = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        let y: Vec<Complex64> = (0..m).map(|i| weights[i] * p[i * m + j]).collect();
        for i in 0..m {
            let py: Complex64 = (0..m).map(|k| p[i * m + k] * y[k]).sum();
            let r = y[i] - py;
            out.push(r.re);
            out.push(r.im);
        }
    }
    out
}

/// Orthonormal basis of the complement of a plane.
fn complement(basis: &[Vec<Complex64>; 2]) -> Vec<Vec<Complex64>> {
    let m = basis[0].len();
    let mut all: Vec<Vec<Complex64>> = basis.to_vec();
    for e in 0..m {
        let mut v: Vec<Complex64> = (0..m).map(|i| if i == e { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect();
        for q in &all {
            let c = hdot(q, &v);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let nv = cnorm(&v);
        if nv > 1e-6 {
            all.push(v.iter().map(|c| c / nv).collect());
        }
    }
    all.split_off(2)
}

/// Plane through `Q + N·Δ`, with `Δ` a complex `(m−2) × 2` block in reals.
fn retract(basis: &[Vec<Complex64>; 2], normal: &[Vec<Complex64>], delta: &[f64]) -> Option<[Vec<Complex64>; 2]> {
    let cols: Vec<Vec<Complex64>> = (0..2)
        .map(|c| {
            let mut v = basis[c].clone();
            for (k, nk) in normal.iter().enumerate() {
                let d = Complex64::new(delta[4 * k + 2 * c], delta[4 * k + 2 * c + 1]);
                v.iter_mut().zip(nk).for_each(|(x, y)| *x += d * y);
            }
            v
        })
        .collect();
    orthonormal_pair(&cols[0], &cols[1])
}

fn chart_jacobian(basis: &[Vec<Complex64>; 2], normal: &[Vec<Complex64>], weights: &[f64]) -> Mat<f64> {
    let dim = 4 * normal.len();
    let h = 1e-6;
    let cols: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let mut d = vec![0.0; dim];
            d[k] = h;
            let plus = retract(basis, normal, &d).map(|b| invariance_residual(&b, weights));
            d[k] = -h;
            let minus = retract(basis, normal, &d).map(|b| invariance_residual(&b, weights));
            match (plus, minus) {
                (Some(p), Some(m)) => p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
                _ => vec![0.0; 2 * weights.len() * weights.len()],
            }
        })
        .collect();
    Mat::from_columns(&cols)
}

/// Levenberg-Marquardt towards an invariant plane, rebasing the chart
/// after each accepted step.
fn polish_plane(mut basis: [Vec<Complex64>; 2], weights: &[f64], max_iter: usize, seed: u64) -> Result<[Vec<Complex64>; 2]> {
    let mut lambda = 1e-6;
    for _ in 0..max_iter {
        let r = invariance_residual(&basis, weights);
        let res = linalg::norm(&r);
        if res < 1e-13 {
            return Ok(basis);
        }
        let normal = complement(&basis);
        let j = chart_jacobian(&basis, &normal, weights).to_na();
        let jt = j.transpose();
        let lhs = &jt * &j + nalgebra::DMatrix::identity(j.ncols(), j.ncols()) * lambda;
        let rhs = -(&jt * nalgebra::DVector::from_vec(r));
        let step = lhs.lu().solve(&rhs).ok_or(GeomError::ConvergenceFailure { seed })?;
        match retract(&basis, &normal, step.as_slice()) {
            Some(trial) if linalg::norm(&invariance_residual(&trial, weights)) < res => {
                basis = trial;
                lambda = (lambda * 0.1).max(1e-12);
            }
            _ => lambda *= 10.0,
        }
    }
    if linalg::norm(&invariance_residual(&basis, weights)) < 1e-9 {
        Ok(basis)
    } else {
        Err(GeomError::ConvergenceFailure { seed })
    }
}

/// Named families of fixed planes for weights `(p, q, …, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrFamily {
    /// Planes `ℂe₀ ⊕ ℓ` with `ℓ ⊂ e₀^⊥`, a copy of `ℂP^{m−2}`.
    ProjectiveSpace,
    /// Planes inside `e₀^⊥`, a copy of `Gr(2, m−1)`.
    Grassmannian,
}

impl GrFamily {
    pub fn dim(self, m: usize) -> usize {
        match self {
            GrFamily::ProjectiveSpace => 2 * (m - 2),
            GrFamily::Grassmannian => 4 * (m - 3),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrFixedComponent {
    /// `tr(Π E_λ)` for each distinct weight `λ`, ascending by weight.
    pub signature: Vec<(i64, usize)>,
    /// Real dimension from the kernel rank of the linearized action.
    pub dim: usize,
    pub family: Option<GrFamily>,
    pub witnesses: usize,
    /// Whether every witness gave the same kernel dimension.
    pub dim_agrees: bool,
    /// Largest distance, over witnesses, from the weighted image of the
    /// representative to its uniform orbit in ℍPⁿ.
    pub orbit_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrFixedSets {
    pub m: usize,
    pub p: i64,
    pub q: i64,
    pub components: Vec<GrFixedComponent>,
    pub failures: usize,
}

impl GrFixedSets {
    /// Component dimensions, sorted descending.
    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.components.iter().map(|c| c.dim).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d
    }
}

#[derive(Clone, Debug)]
pub struct GrSearchOptions {
    pub seeds: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for GrSearchOptions {
    fn default() -> Self {
        GrSearchOptions { seeds: 60, seed: 42, max_iter: 80 }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn random_complex(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

/// Fixed planes of the action with weights `(p, q, …, q)` on `Gr(2, m)`.
///
/// Seeds are polished to invariant planes, grouped by how they meet the
/// weight spaces, and each group's dimension is read off the kernel of the
/// linearized action.
pub fn weighted_fixed_sets_on_gr(p: i64, q: i64, m: usize, opts: &GrSearchOptions) -> Result<GrFixedSets> {
    if p == q || gcd(p, q) != 1 {
        return Err(GeomError::InvalidWeights { reason: "need p ≠ q with gcd(p, q) = 1" });
    }
    if m < 3 {
        return Err(GeomError::InvalidDimension { dim: m, reason: "Gr(2, m) needs m ≥ 3 for a nontrivial action" });
    }
    let iweights: Vec<i64> = std::iter::once(p).chain(std::iter::repeat_n(q, m - 1)).collect();
    let weights: Vec<f64> = iweights.iter().map(|&w| w as f64).collect();
    let action = CircleAction::new(iweights.clone())?;
    let mut distinct = iweights.clone();
    distinct.sort_unstable();
    distinct.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut groups: Vec<GrFixedComponent> = Vec::new();
    let mut failures = 0;
    for s in 0..opts.seeds {
        let (a, b) = (random_complex(m, &mut rng), random_complex(m, &mut rng));
        let Some(start) = orthonormal_pair(&a, &b) else {
            failures += 1;
            continue;
        };
        let basis = match polish_plane(start, &weights, opts.max_iter, s as u64) {
            Ok(b) => b,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let proj = projector(&basis);
        let signature: Vec<(i64, usize)> = distinct
            .iter()
            .map(|&w| {
                let t: f64 = (0..m).filter(|&l| iweights[l] == w).map(|l| proj[l * m + l].re).sum();
                (w, t.round() as usize)
            })
            .collect();
        let normal = complement(&basis);
        let dim = 4 * normal.len() - linalg::rank(&chart_jacobian(&basis, &normal, &weights), 1e-6);
        let point = GrPoint::from_plane(&basis[0], &basis[1])?;
        let z = point.rep.to_hvec();
        let moved = action.act(1.0, &z);
        let defect = orbit_distance(&CircleAction::uniform(m - 1), &z, &moved);
        match groups.iter_mut().find(|g| g.signature == signature) {
            Some(g) => {
                g.witnesses += 1;
                g.dim_agrees &= g.dim == dim;
                g.orbit_defect = g.orbit_defect.max(defect);
            }
            None => {
                let in_line = signature.iter().find(|(w, _)| *w == p).map_or(0, |s| s.1);
                let family = match in_line {
                    1 => Some(GrFamily::ProjectiveSpace),
                    0 => Some(GrFamily::Grassmannian),
                    _ => None,
                };
                groups.push(GrFixedComponent { signature, dim, family, witnesses: 1, dim_agrees: true, orbit_defect: defect });
            }
        }
    }
    Ok(GrFixedSets { m, p, q, components: groups, failures })
}

/// Minimal `line_distance(e^{iθ}·a, b)` over the circle: a 256-point grid
/// followed by golden-section refinement around the best node.
pub fn orbit_distance(action: &CircleAction, a: &HVec<f64>, b: &HVec<f64>) -> f64 {
    let f = |t: f64| line_distance(&action.act(t, a), b);
    let n = 256;
    let h = 2.0 * PI / n as f64;
    let best = (0..n).map(|k| k as f64 * h).min_by(|&x, &y| f(x).total_cmp(&f(y))).unwrap_or(0.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best - h, best + h);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2).min(f(best))
}

/// A point `(z, w)` of `‖z‖² − ‖w‖² = 1, ⟨z, w⟩ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LPoint {
    pub z: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl LPoint {
    /// Checks both constraints within `1e-8`.
    pub fn new(z: Vec<Complex64>, w: Vec<Complex64>, pairing: Pairing) -> Result<Self> {
        let p = LPoint { z, w };
        let (level, pair) = p.residuals(pairing);
        if level > 1e-8 {
            return Err(GeomError::InvariantViolation { what: "‖z‖² − ‖w‖² = 1", residual: level });
        }
        if pair > 1e-8 {
            return Err(GeomError::InvariantViolation { what: "⟨z, w⟩ = 0", residual: pair });
        }
        Ok(p)
    }

    /// `(|‖z‖² − ‖w‖² − 1|, |⟨z, w⟩|)`.
    pub fn residuals(&self, pairing: Pairing) -> (f64, f64) {
        let level = cnorm(&self.z).powi(2) - cnorm(&self.w).powi(2) - 1.0;
        (level.abs(), pairing.eval(&self.z, &self.w).norm())
    }

    /// A random point; `w = 0` when `n = 1`.
    pub fn random(n: usize, pairing: Pairing, rng: &mut impl Rng) -> Self {
        let w: Vec<Complex64> = if n == 1 { vec![Complex64::new(0.0, 0.0); 1] } else { random_complex(n, rng) };
        let mut z = random_complex(n, rng);
        // remove the component of z seen by the pairing with w
        let dir: Vec<Complex64> = match pairing {
            Pairing::Bilinear => w.iter().map(|c| c.conj()).collect(),
            Pairing::Hermitian => w.clone(),
        };
        let nn = cnorm(&dir).powi(2);
        if nn > 0.0 {
            let c = hdot(&dir, &z) / nn;
            z.iter_mut().zip(&dir).for_each(|(x, d)| *x -= c * d);
        }
        let s = ((1.0 + cnorm(&w).powi(2)) / cnorm(&z).powi(2)).sqrt();
        z.iter_mut().for_each(|x| *x *= s);
        LPoint { z, w }
    }

    /// `(e^{iθ}z, e^{−iθ}w)`, the circle identified by `φ`.
    pub fn rotate(&self, theta: f64) -> Self {
        let e = Complex64::from_polar(1.0, theta);
        LPoint { z: self.z.iter().map(|c| c * e).collect(), w: self.w.iter().map(|c| c * e.conj()).collect() }
    }
}

/// `ι(z, w) = ((1, w), (0, z))` as `u + j·v` in ℍ^{n+1}.
pub fn tcp_iota(p: &LPoint) -> SpherePoint {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let u = std::iter::once(one).chain(p.w.iter().copied()).collect();
    let v = std::iter::once(zero).chain(p.z.iter().copied()).collect();
    SpherePoint::new(u, v)
}

/// Weights `(0, 1, …, 1)`, whose orbits `φ` maps into.
pub fn tcp_action(n: usize) -> CircleAction {
    CircleAction { weights: std::iter::once(0).chain(std::iter::repeat_n(1, n)).collect() }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiReport {
    pub n: usize,
    pub pairing: Pairing,
    /// Fraction of samples whose image is on the zero set.
    pub on_zero_set: f64,
    /// Largest orbit distance between `φ(p)` and `φ(e^{iθ}·p)`.
    pub well_defined: f64,
    /// Smallest orbit distance between images of independent samples.
    pub min_separation: f64,
    /// Rank of `φ` along the zero section, modulo the orbit direction.
    pub zero_section_rank: usize,
}

/// Samples `φ = [f ∘ ι]` on random points.
pub fn tcp_phi_report(n: usize, pairing: Pairing, samples: usize, seed: u64) -> Result<PhiReport> {
    if n == 0 {
        return Err(GeomError::InvalidDimension { dim: n, reason: "need n ≥ 1" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let action = tcp_action(n);
    let points: Vec<LPoint> = (0..samples).map(|_| LPoint::random(n, pairing, &mut rng)).collect();
    let images: Vec<HVec<f64>> = points.iter().map(|p| tcp_iota(p).to_hvec()).collect();
    let on = points.iter().filter(|p| classify(&tcp_iota(p), 1e-10).label == ZeroSetLabel::OnZeroSet).count();
    let mut well_defined: f64 = 0.0;
    for (p, img) in points.iter().zip(&images) {
        let theta = rng.gen_range(0.0..2.0 * PI);
        well_defined = well_defined.max(orbit_distance(&action, img, &tcp_iota(&p.rotate(theta)).to_hvec()));
    }
    let min_separation = images.chunks_exact(2).map(|pair| orbit_distance(&action, &pair[0], &pair[1])).fold(f64::INFINITY, f64::min);
    let z0 = random_complex(n, &mut rng);
    let s = cnorm(&z0);
    let z0: Vec<Complex64> = z0.iter().map(|c| c / s).collect();
    Ok(PhiReport {
        n,
        pairing,
        on_zero_set: on as f64 / samples.max(1) as f64,
        well_defined,
        min_separation,
        zero_section_rank: zero_section_rank(&z0),
    })
}

/// Rank of `z ↦ φ(z, 0)` at a unit `z`, after removing the orbit direction.
///
/// In chart 0 the image is `q_l = j z_l`, so the map is linear.
pub fn zero_section_rank(z: &[Complex64]) -> usize {
    let n = z.len();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let chart = |dz: &[Complex64]| HVec::recompose(&zero, dz).embed_real();
    let q = chart(z);
    let x = tcp_action(n).field(0).eval(&q);
    let xn = linalg::norm(&x);
    let mut cols = Vec::new();
    for k in 0..2 * n {
        let mut dz = vec![Complex64::new(0.0, 0.0); n];
        dz[k / 2] = if k % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::i() };
        // tangent to the sphere
        let radial = hdot(z, &dz).re;
        dz.iter_mut().zip(z).for_each(|(d, zz)| *d -= radial * zz);
        let col = chart(&dz);
        let c = linalg::dot(&col, &x) / (xn * xn);
        cols.push(col.iter().zip(&x).map(|(a, b)| a - c * b).collect::<Vec<f64>>());
    }
    // Columns have unit scale, so an absolute cutoff keeps roundoff out of the rank.
    Mat::from_columns(&cols).to_na().singular_values().iter().filter(|&&v| v > 1e-8).count()
}

/// Largest `line_distance` between the two orders of applying the
/// weights-`(0, 1, …, 1)` and uniform actions.
pub fn action_commutation(n: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (tcp_action(n), CircleAction::uniform(n));
    (0..samples)
        .map(|_| {
            let (u, v) = (random_complex(n + 1, &mut rng), random_complex(n + 1, &mut rng));
            let z = HVec::recompose(&u, &v);
            let (s, t) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
            line_distance(&a.act(s, &b.act(t, &z)), &b.act(t, &a.act(s, &z)))
        })
        .fold(0.0, f64::max)
}

/// Counts of zero-set samples where `‖μ̂°‖ < 1e-12` and `|u₀| + |v₀| < 1e-6`
/// agree; half the samples are drawn inside `{u₀ = v₀ = 0}`.
pub fn mu_circ_zero_locus(n: usize, samples: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0;
    for s in 0..samples {
        let (mut u, mut v) = (random_complex(n + 1, &mut rng), random_complex(n + 1, &mut rng));
        if s % 2 == 0 {
            u[0] = Complex64::new(0.0, 0.0);
            v[0] = Complex64::new(0.0, 0.0);
        }
        let z = crate::swann::zero_set_point(u, v);
        let r = z.r2.sqrt();
        let z = SpherePoint::new(z.u.iter().map(|c| c / r).collect(), z.v.iter().map(|c| c / r).collect());
        let vanishes = linalg::norm(&mu_circ_hat(&z)) < 1e-12;
        let on_locus = z.u[0].norm() + z.v[0].norm() < 1e-6;
        if vanishes == on_locus {
            agree += 1;
        }
    }
    (agree, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::swann::mu_hat;
    use crate::swann::ThetaConvention;
    use proptest::prelude::{prop_assert, proptest};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mu_circ_hand_cases() {
        let o = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        assert_eq!(mu_circ_hat(&SpherePoint::new(vec![one, o], vec![o, o])), [1.0, 0.0, 0.0]);
        assert_eq!(mu_circ_hat(&SpherePoint::new(vec![o, one], vec![o, one])), [0.0, 0.0, 0.0]);
        assert_eq!(mu_circ_hat(&SpherePoint::new(vec![one, o], vec![one, o])), [0.0, 0.0, 2.0]);
    }

    #[test]
    fn mu_circ_is_the_scaled_twistor_map_of_the_first_coordinate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = SpherePoint::new(random_complex(3, &mut rng), random_complex(3, &mut rng));
        let a = CircleAction::new(vec![1, 0, 0]).unwrap();
        let m = mu_hat(&z, &a, ThetaConvention::Connection);
        let mc = mu_circ_hat(&z);
        let expected = [m[0] * z.r2, -m[1] * z.r2, m[2] * z.r2];
        assert!(linalg::norm(&sub(&mc, &expected)) < 1e-12);
    }

    #[test]
    fn mu_circ_covariance_trivial_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = SpherePoint::new(random_complex(3, &mut rng), random_complex(3, &mut rng));
        assert_eq!(mu_circ_covariance(&z, 0.0, 0.0).max(), 0.0);
        assert!(mu_circ_covariance(&z, PI, 0.0).left < 1e-14);
    }

    proptest! {
        #[test]
        fn mu_circ_covariance_random(seed in 0u64..1000, theta in 0.0..6.3f64, t in 0.0..6.3f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = SpherePoint::new(random_complex(3, &mut rng), random_complex(3, &mut rng));
            prop_assert!(mu_circ_covariance(&z, theta, t).max() < 1e-10);
        }

        #[test]
        fn lpoints_land_on_the_zero_set(seed in 0u64..1000, n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = LPoint::random(n, Pairing::Bilinear, &mut rng);
            let (level, pair) = p.residuals(Pairing::Bilinear);
            prop_assert!(level < 1e-12 && pair < 1e-12);
            let img = tcp_iota(&p);
            prop_assert!(classify(&img, 1e-10).label == ZeroSetLabel::OnZeroSet);
            prop_assert!(img.u[0] == c(1.0, 0.0) && img.v[0] == c(0.0, 0.0));
        }
    }

    #[test]
    fn iota_of_the_first_basis_vector() {
        let p = LPoint::new(vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0); 2], Pairing::Bilinear).unwrap();
        let img = tcp_iota(&p);
        assert_eq!(img.u, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(img.v, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(classify(&img, 1e-10).label, ZeroSetLabel::OnZeroSet);
    }

    #[test]
    fn lpoint_constraints_are_enforced() {
        let bad = LPoint::new(vec![c(2.0, 0.0)], vec![c(0.0, 0.0)], Pairing::Bilinear);
        assert!(matches!(bad, Err(GeomError::InvariantViolation { .. })));
    }

    #[test]
    fn hermitian_pairing_misses_the_zero_set() {
        let r = tcp_phi_report(3, Pairing::Hermitian, 20, 1).unwrap();
        assert!(r.on_zero_set < 0.5);
    }

    #[test]
    fn phi_is_well_defined_injective_and_has_the_expected_zero_section_rank() {
        for n in [2, 3] {
            let r = tcp_phi_report(n, Pairing::Bilinear, 200, 42).unwrap();
            assert_eq!(r.on_zero_set, 1.0);
            assert!(r.well_defined < 1e-10, "{r:?}");
            assert!(r.min_separation > 1e-4, "{r:?}");
            assert_eq!(r.zero_section_rank, 2 * (n - 1));
        }
    }

    #[test]
    fn orbit_distance_of_a_point_to_itself_rotated() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = HVec::recompose(&random_complex(3, &mut rng), &random_complex(3, &mut rng));
        let a = tcp_action(2);
        assert!(orbit_distance(&a, &z, &a.act(2.2, &z)) < 1e-10);
    }

    #[test]
    fn the_two_actions_commute() {
        assert!(action_commutation(3, 100, 5) < 1e-10);
    }

    #[test]
    fn mu_circ_vanishes_exactly_on_the_first_coordinate_locus() {
        let (agree, total) = mu_circ_zero_locus(2, 1000, 7);
        assert_eq!(agree, total);
    }

    #[test]
    fn gr_point_invariants() {
        let p = GrPoint::from_plane(&[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let proj = p.projector();
        let tr: f64 = (0..3).map(|i| proj[i * 3 + i].re).sum();
        assert!((tr - 2.0).abs() < 1e-12);
        assert!(GrPoint::new(SpherePoint::new(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)])).is_err());
    }

    #[test]
    fn fixed_sets_on_gr_2_3_and_gr_2_4() {
        let r3 = weighted_fixed_sets_on_gr(1, 2, 3, &GrSearchOptions::default()).unwrap();
        assert_eq!(r3.dims(), vec![2, 0], "{r3:?}");
        let r4 = weighted_fixed_sets_on_gr(2, 1, 4, &GrSearchOptions::default()).unwrap();
        assert_eq!(r4.dims(), vec![4, 4], "{r4:?}");
        for r in [&r3, &r4] {
            for comp in &r.components {
                let fam = comp.family.expect("named family");
                assert_eq!(comp.dim, fam.dim(r.m));
                assert!(comp.dim_agrees);
                assert!(comp.orbit_defect < 1e-8, "{comp:?}");
            }
        }
    }

    #[test]
    fn zero_section_rank_is_phase_independent() {
        for a in [0.0, 0.3, 1.0, 2.0, 4.0] {
            assert_eq!(zero_section_rank(&[Complex64::from_polar(1.0, a)]), 0);
            let z = [Complex64::from_polar(0.6, a), Complex64::from_polar(0.8, -2.0 * a)];
            assert_eq!(zero_section_rank(&z), 2);
        }
    }

    #[test]
    fn invalid_weights_are_rejected() {
        assert!(matches!(weighted_fixed_sets_on_gr(2, 2, 4, &GrSearchOptions::default()), Err(GeomError::InvalidWeights { .. })));
        assert!(matches!(weighted_fixed_sets_on_gr(2, 4, 4, &GrSearchOptions::default()), Err(GeomError::InvalidWeights { .. })));
    }
}
