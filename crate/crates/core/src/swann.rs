//! The Swann bundle of ℍPⁿ realized as ℍ^{n+1}∖{0}.
//!
//! A point `z = u + j·v` is stored by its complex halves. The connection
//! one-forms of the frame bundle induced from the Levi-Civita connection are
//! explicit in `(u, v)`, and evaluating them on the lifted action field gives
//! the lifted twistor map `μ̂`.

use crate::error::Result;
use crate::hpn::{chart_coords, horizontal_lift, inverse_metric, section, ChartPoint, CircleAction, HPn};
use crate::linalg::{self, polar_rotation, Mat};
use crate::quat::{right_mult_block, HVec, Quat, Q64};
use crate::quaternionic::{check_twistor, connection_forms, q_inner, Frame, FrameField, QCurvature, QStructure};
use crate::scalar::Scalar;
use crate::tensor::{as_mat, DerivEngine, Field};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Sign convention for the third connection form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaConvention {
    /// `θ₃ = −r⁻² Im Σ(u dv − v du)`, so that `θ_α(z·e_α) = 1` for all three
    /// units and `(θ₁, θ₂, θ₃)` is a genuine connection form.
    #[default]
    Connection,
    /// `θ₃ = +r⁻² Im Σ(u dv − v du)`, which reverses orientation; kept so
    /// the discrepancy stays measurable.
    Reversed,
}

/// A point `z = u + j·v` of ℍ^{n+1}∖{0}.
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePoint {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    /// `Σ |u_l|² + |v_l|²`.
    pub r2: f64,
}

impl SpherePoint {
    pub fn new(u: Vec<Complex64>, v: Vec<Complex64>) -> Self {
        assert_eq!(u.len(), v.len(), "halves must have equal length");
        let r2 = u.iter().chain(&v).map(|c| c.norm_sqr()).sum();
        SpherePoint { u, v, r2 }
    }

    pub fn from_hvec(z: &HVec<f64>) -> Self {
        let (u, v) = z.split_complex();
        SpherePoint::new(u, v)
    }

    pub fn to_hvec(&self) -> HVec<f64> {
        HVec::recompose(&self.u, &self.v)
    }

    /// `ᵗu v = Σ u_l v_l` (bilinear).
    pub fn pairing(&self) -> Complex64 {
        self.u.iter().zip(&self.v).map(|(a, b)| a * b).sum()
    }

    /// `Σ ū_l v_l` (Hermitian), for comparison.
    pub fn hermitian_pairing(&self) -> Complex64 {
        self.u.iter().zip(&self.v).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn u_norm(&self) -> f64 {
        self.u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn v_norm(&self) -> f64 {
        self.v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A tangent vector `du + j·dv` at a sphere point.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereTangent {
    pub du: Vec<Complex64>,
    pub dv: Vec<Complex64>,
}

impl SphereTangent {
    pub fn from_hvec(w: &HVec<f64>) -> Self {
        let (du, dv) = w.split_complex();
        SphereTangent { du, dv }
    }
}

/// `(θ₁, θ₂, θ₃)(W)` at `z`.
pub fn theta_forms(z: &SpherePoint, w: &SphereTangent, conv: ThetaConvention) -> [f64; 3] {
    let first: Complex64 = z.u.iter().zip(&w.du).map(|(a, b)| a.conj() * b).sum::<Complex64>()
        + z.v.iter().zip(&w.dv).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let mixed: Complex64 =
        z.u.iter().zip(&w.dv).map(|(a, b)| a * b).sum::<Complex64>() - z.v.iter().zip(&w.du).map(|(a, b)| a * b).sum::<Complex64>();
    let sign = match conv {
        ThetaConvention::Connection => -1.0,
        ThetaConvention::Reversed => 1.0,
    };
    [first.im / z.r2, mixed.re / z.r2, sign * mixed.im / z.r2]
}

/// `X̂ = (p_l i z_l)_l = (p_l i u_l, −p_l i v_l)_l`.
pub fn lifted_action_field(action: &CircleAction, z: &SpherePoint) -> SphereTangent {
    let i = Complex64::i();
    let p = action.weights.iter().map(|&w| w as f64);
    let du = z.u.iter().zip(p.clone()).map(|(a, w)| i * a * w).collect();
    let dv = z.v.iter().zip(p).map(|(a, w)| -i * a * w).collect();
    SphereTangent { du, dv }
}

/// `μ̂(z) = θ(X̂)(z)`.
pub fn mu_hat(z: &SpherePoint, action: &CircleAction, conv: ThetaConvention) -> [f64; 3] {
    theta_forms(z, &lifted_action_field(action, z), conv)
}

/// `r⁻²(|u|² − |v|², 2 Im ᵗuv, 2 Re ᵗuv)` for weights `(1, …, 1)`.
pub fn mu_hat_uniform(z: &SpherePoint) -> [f64; 3] {
    let b = z.pairing();
    let (a, c) = (z.u_norm(), z.v_norm());
    [(a * a - c * c) / z.r2, 2.0 * b.im / z.r2, 2.0 * b.re / z.r2]
}

/// Position relative to the zero set of `μ̂` for weights `(1, …, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroSetLabel {
    OnZeroSet,
    PontecorvoDomain,
    OppositeDomain,
    Generic,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZeroSetWitness {
    pub label: ZeroSetLabel,
    /// `|ᵗuv|/r²`.
    pub pairing: f64,
    /// `(‖u‖ − ‖v‖)/r`.
    pub gap: f64,
}

/// Classifies with scale-free witnesses.
pub fn classify(z: &SpherePoint, tol: f64) -> ZeroSetWitness {
    let r = z.r2.sqrt();
    let pairing = z.pairing().norm() / z.r2;
    let gap = (z.u_norm() - z.v_norm()) / r;
    let label = match (pairing < tol, gap) {
        (true, g) if g.abs() < tol => ZeroSetLabel::OnZeroSet,
        (true, g) if g > 0.0 => ZeroSetLabel::PontecorvoDomain,
        (true, _) => ZeroSetLabel::OppositeDomain,
        (false, _) => ZeroSetLabel::Generic,
    };
    ZeroSetWitness { label, pairing, gap }
}

/// Residuals of the real-form change of coordinates
/// `z_i = ½(u_i + v_i)`, `z_{n+1+i} = −(i/2)(u_i − v_i)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoordinateChange {
    /// `|ᵗzz − ᵗuv|`.
    pub bilinear: f64,
    /// `|‖u‖² − ‖z‖² − 2Σ Im z_i z̄_{n+1+i}|`.
    pub u_norm: f64,
    /// `|‖v‖² − ‖z‖² + 2Σ Im z_i z̄_{n+1+i}|`.
    pub v_norm: f64,
}

impl CoordinateChange {
    pub fn max(&self) -> f64 {
        self.bilinear.max(self.u_norm).max(self.v_norm)
    }
}

/// `(u, v)` from the `2(n+1)` real-form coordinates.
pub fn halves_from_real_form(z: &[Complex64]) -> SpherePoint {
    let m = z.len() / 2;
    let i = Complex64::i();
    let u = (0..m).map(|k| z[k] + i * z[m + k]).collect();
    let v = (0..m).map(|k| z[k] - i * z[m + k]).collect();
    SpherePoint::new(u, v)
}

/// `Σ Im z_i z̄_{offset+i}` over the first half.
fn im_cross(z: &[Complex64], offset: usize) -> f64 {
    (0..z.len() / 2).map(|k| (z[k] * z.get(offset + k).copied().unwrap_or_default().conj()).im).sum()
}

pub fn coordinate_change_check(z: &[Complex64]) -> CoordinateChange {
    let p = halves_from_real_form(z);
    let m = z.len() / 2;
    let zz: Complex64 = z.iter().map(|c| c * c).sum();
    let zn: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let cross = im_cross(z, m);
    CoordinateChange {
        bilinear: (zz - p.pairing()).norm(),
        u_norm: (p.u_norm().powi(2) - zn - 2.0 * cross).abs(),
        v_norm: (p.v_norm().powi(2) - zn + 2.0 * cross).abs(),
    }
}

/// The third identity with `z̄_{n+i}` in place of `z̄_{n+1+i}`.
pub fn v_norm_shifted_index(z: &[Complex64]) -> f64 {
    let p = halves_from_real_form(z);
    let zn: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    // 1-based z_{n+i} is 0-based index n + i − 1 = (m − 1) + k
    (p.v_norm().powi(2) - zn + 2.0 * im_cross(z, z.len() / 2 - 1)).abs()
}

/// Frame induced at `z(q)·λ`: `I_α X = dπ(hor_z(X)·ē_α)` with
/// `hor_z = (right multiplication by λ) ∘ hor_{z(q)}`.
pub fn frame_at_fiber_point(q: &[f64], lambda: Q64) -> Frame<f64> {
    let h = horizontal_lift(q);
    let hz = &right_mult_block(lambda, h.rows / 4) * &h;
    let scale = 1.0 / lambda.norm_sq();
    let ginv = inverse_metric(q).scale_f(scale);
    [Q64::I, Q64::J, Q64::K].map(|u| {
        let r = right_mult_block(u.conj(), h.rows / 4);
        &ginv * &(&hz.transpose() * &(&r * &hz))
    })
}

/// Rotation `A ∈ SO(3)` nearest to `C_{αβ} = (I^z_α, I_β)`.
pub fn frame_alignment(at_z: &Frame<f64>, chart: &Frame<f64>) -> Mat<f64> {
    let n = chart[0].rows / 4;
    let c = Mat::from_fn(3, 3, |a, b| q_inner(&at_z[a], &chart[b], n));
    polar_rotation(&c)
}

/// `μ̄_α = (f_Q, I_α)` in the chart frame at `q`.
pub fn mu_bar_components(space: &HPn, action: &CircleAction, chart: usize, q: &[f64]) -> [f64; 3] {
    let t = space.twistor(action, chart);
    let f = as_mat(t.mu_bar.eval(q), space.dim());
    let fr = space.q_frame().frame(q);
    [0, 1, 2].map(|a| q_inner(&f, &fr[a], space.n))
}

/// Outcome of the lift identity `θ_α(X̂) ∘ s = μ̄_α` at one fiber point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LiftCheck {
    pub mu_hat: [f64; 3],
    pub aligned_mu_bar: [f64; 3],
    pub residual: f64,
}

/// Compares `θ(X̂)` at `z(q)·λ` with `μ̄(q)` rotated into the frame at that point.
pub fn lift_identity(space: &HPn, action: &CircleAction, q: &[f64], lambda: Q64, conv: ThetaConvention) -> LiftCheck {
    let z = section(q, 0);
    let zl = HVec::new(z.entries.iter().map(|&e| e * lambda).collect());
    let mh = mu_hat(&SpherePoint::from_hvec(&zl), action, conv);
    let mb = mu_bar_components(space, action, 0, q);
    let a = frame_alignment(&frame_at_fiber_point(q, lambda), &space.q_frame().frame(q));
    let al = a.mul_vec(&mb);
    let aligned = [al[0], al[1], al[2]];
    let residual = (0..3).map(|k| (mh[k] - aligned[k]).abs()).fold(0.0, f64::max);
    LiftCheck { mu_hat: mh, aligned_mu_bar: aligned, residual }
}

/// Scalar field `μ̄_α = (f_Q, I_α)` for any frame field.
struct MuBarComponent<'a, M, F> {
    mu: &'a M,
    frame: &'a F,
    alpha: usize,
}

impl<M: Field, F: FrameField> Field for MuBarComponent<'_, M, F> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let d = self.frame.dim();
        let m = as_mat(self.mu.eval(x), d);
        let i = self.frame.frame(x);
        vec![q_inner(&m, &i[self.alpha], d / 4)]
    }
}

/// Both sides of `dμ̄_α = −½ ι_XΩ_α − μ̄_γ θ_β + μ̄_β θ_γ` at `q`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentDerivativeCheck {
    pub lhs: [Vec<f64>; 3],
    pub rhs: [Vec<f64>; 3],
    pub residual: f64,
}

/// Evaluates the identity for the Levi-Civita `f_Q` of `action` in chart 0,
/// with the connection and curvature forms of the frame field `frame`.
pub fn moment_derivative_check<F: FrameField>(space: &HPn, action: &CircleAction, frame: &F, q: &[f64]) -> Result<MomentDerivativeCheck> {
    let d = space.dim();
    let engine = DerivEngine::Dual;
    let lc = space.levi_civita();
    let mu = space.twistor(action, 0).mu_bar;
    let xv = action.field(0).eval(q);
    let mub: Vec<f64> = (0..3).map(|a| MuBarComponent { mu: &mu, frame, alpha: a }.eval(q)[0]).collect();
    let theta = connection_forms(&lc, frame, q, engine);
    let curv = QCurvature::at(&lc, &FrameAsStructure(frame), q, engine, &space.chart(0)?)?;
    let omega = curv.omega_forms()?.commutator;
    let mut lhs = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut rhs = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut residual: f64 = 0.0;
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let grad = engine.partials(&MuBarComponent { mu: &mu, frame, alpha: a }, q);
        let ix = omega[a].transpose().mul_vec(&xv);
        for j in 0..d {
            lhs[a][j] = grad[j][0];
            rhs[a][j] = -0.5 * ix[j] - mub[c] * theta[b][j] + mub[b] * theta[c][j];
            residual = residual.max((lhs[a][j] - rhs[a][j]).abs());
        }
    }
    Ok(MomentDerivativeCheck { lhs, rhs, residual })
}

/// A frame field used as the local Q-structure it spans.
struct FrameAsStructure<'a, F>(&'a F);

impl<F: FrameField> QStructure for FrameAsStructure<'_, F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn frame<T: Scalar>(&self, x: &[T]) -> Frame<T> {
        self.0.frame(x)
    }
}

/// `max_α |dμ̂(z·e_α) − 2 μ̂ × e_α|` by central differences along the fiber.
pub fn vertical_identity_residual(z: &SpherePoint, action: &CircleAction, conv: ThetaConvention) -> f64 {
    let h = 1e-5;
    let m = mu_hat(z, action, conv);
    let zq = z.to_hvec();
    let mut worst: f64 = 0.0;
    for (a, u) in [Q64::I, Q64::J, Q64::K].into_iter().enumerate() {
        let at = |t: f64| {
            let rot = Q64::exp_imag(u, t);
            mu_hat(&SpherePoint::from_hvec(&HVec::new(zq.entries.iter().map(|&e| e * rot).collect())), action, conv)
        };
        let (p, q) = (at(h), at(-h));
        let mut e = [0.0; 3];
        e[a] = 1.0;
        let cross = [m[1] * e[2] - m[2] * e[1], m[2] * e[0] - m[0] * e[2], m[0] * e[1] - m[1] * e[0]];
        for k in 0..3 {
            worst = worst.max(((p[k] - q[k]) / (2.0 * h) - 2.0 * cross[k]).abs());
        }
    }
    worst
}

/// Zero-set agreement sample: the label upstairs next to `‖f_Q‖` downstairs.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroSetSample {
    pub label: ZeroSetLabel,
    pub f_q_norm: f64,
    pub agrees: bool,
}

/// `‖f_Q‖` at `π(z)` for weights `(1, …, 1)`.
pub fn downstairs_norm(space: &HPn, z: &SpherePoint) -> f64 {
    let p = ChartPoint::from_line(&z.to_hvec());
    let action = CircleAction::uniform(space.n);
    let m = mu_bar_components(space, &action, p.chart, &p.q);
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn zero_set_sample(space: &HPn, z: &SpherePoint, tol: f64) -> ZeroSetSample {
    let label = classify(z, tol).label;
    let f_q_norm = downstairs_norm(space, z);
    let agrees = (label == ZeroSetLabel::OnZeroSet) == (f_q_norm < tol);
    ZeroSetSample { label, f_q_norm, agrees }
}

/// Point on the zero set `ᵗuv = 0, ‖u‖ = ‖v‖` built from two random
/// complex vectors: `v` is projected off the bilinear annihilator of `u`.
pub fn zero_set_point(u: Vec<Complex64>, v: Vec<Complex64>) -> SpherePoint {
    // ᵗuv = ⟨ū, v⟩, so remove the ū-component of v
    let ubar: Vec<Complex64> = u.iter().map(|c| c.conj()).collect();
    let nn: f64 = ubar.iter().map(|c| c.norm_sqr()).sum();
    let coeff: Complex64 = ubar.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<Complex64>() / nn;
    let w: Vec<Complex64> = v.iter().zip(&ubar).map(|(b, a)| b - coeff * a).collect();
    let (un, wn) = (u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(), w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
    SpherePoint::new(u, w.into_iter().map(|c| c * (un / wn)).collect())
}

/// `c_α(I_α Y) = −ξ(Y)` for every `α` and basis `Y`, from the twistor check.
pub fn horizontal_pairing_residual(space: &HPn, action: &CircleAction, q: &[f64]) -> f64 {
    let t = space.twistor(action, 0);
    let r = check_twistor(&t, &space.q_frame(), q, DerivEngine::Dual);
    let f = space.q_frame().frame(q);
    let d = space.dim();
    let mut worst: f64 = 0.0;
    for a in 0..3 {
        // c_α ∘ I_α as a covector
        let ci = f[a].transpose().mul_vec(&r.c[a]);
        for j in 0..d {
            worst = worst.max((ci[j] + r.xi[j]).abs());
        }
    }
    worst
}

/// Chart coordinates of `π(z)` in chart 0.
pub fn project(z: &SpherePoint) -> Result<Vec<f64>> {
    chart_coords(&z.to_hvec(), 0)
}

/// Unit quaternion from four reals.
pub fn unit_quat(v: [f64; 4]) -> Q64 {
    let q = Quat::new(v[0], v[1], v[2], v[3]);
    q.scale(1.0 / q.norm())
}

/// `|μ̂| = ‖μ̄‖` check at `q` (frame independent, no alignment).
pub fn norm_agreement(space: &HPn, action: &CircleAction, q: &[f64], conv: ThetaConvention) -> f64 {
    let m = mu_hat(&SpherePoint::from_hvec(&section(q, 0)), action, conv);
    let b = mu_bar_components(space, action, 0, q);
    (linalg::norm(&m) - linalg::norm(&b)).abs()
}
