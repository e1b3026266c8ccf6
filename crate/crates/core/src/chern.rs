//! First Chern class pairings over a projective line in the fixed set.
//!
//! For weights `(1, …, 1)` on ℍPⁿ the fixed set `F` is a copy of ℂPⁿ,
//! which in chart 0 is `ℂⁿ ⊂ ℍⁿ`. Classes are seen only through their
//! integral over the line `q₁ ∈ ℂ`, compactified by `r = tan(χ/2)`.
//!
//! Both representatives are evaluated as bilinear forms on the whole
//! tangent space and integrated with the complex orientation of the line:
//!
//! * `c₁(F)`: `(1/4π) Tr_{TF}(R_{X,Y} ∘ I)` for the induced connection,
//! * `c₁(M)`: `−(1/2π) Ric^μ_I` for the μ-connection, `Ric_I = Ric(·, I·)`,
//!
//! with `I = μ̄/‖μ̄‖`.

use crate::error::{GeomError, Result};
use crate::hpn::{fixed_tangent_space, CircleAction, HPn};
use crate::linalg::{self, Mat};
use crate::quat::flat_frame;
use crate::quaternionic::{
    b_from_ricci, complete_frame, modify_connection, Modified, MuConnection, QCurvature, QStructure, TwistorDatum, UnitTwistor,
};
use crate::scalar::Scalar;
use crate::tensor::{as_mat, integrate_2form, riemann_at, unit, Connection, DerivEngine, Field, Grid, LineChart, Riemann, Surface};
use serde::Serialize;
use std::f64::consts::PI;

/// A pairing of a closed two-form with the line.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CyclePairing {
    pub value: f64,
    pub nodes: usize,
    /// Sign applied so that the line carries its complex orientation.
    pub orientation: f64,
}

/// The line `q₁ = r e^{iφ}`, other coordinates zero, in chart 0.
pub fn fixed_line(n: usize) -> LineChart {
    let d = 4 * n;
    LineChart { base: vec![0.0; d], a: unit(d, 0), b: unit(d, 1) }
}

/// `sign g(I∂_χ, ∂_φ)` at an interior point of the line.
pub fn line_orientation(space: &HPn, i: &Mat<f64>, line: &LineChart, chi: f64, phi: f64) -> f64 {
    let p = line.point(chi, phi);
    let (dc, dp) = line.tangents(chi, phi);
    let g = as_mat(space.metric().eval(&p), space.dim());
    linalg::dot(&g.mul_vec(&i.mul_vec(&dc)), &dp).signum()
}

fn unit_twistor<M: Field>(mu_bar: &M, n: usize, q: &[f64]) -> Mat<f64> {
    as_mat(UnitTwistor(mu_bar, n).eval(q), 4 * n)
}

/// `Ric_I(X, Y) = Ric(X, IY)` as a matrix; with this slot `Ω₁ = (1/n) Ric_{I₁}`.
pub fn ric_i(ric: &Mat<f64>, i: &Mat<f64>) -> Mat<f64> {
    ric * i
}

/// `(X, Y) ↦ Tr_{TF}(R_{X,Y} ∘ I)` for an orthonormal basis `tf` of a
/// subspace preserved by `I` and every `R_{X,Y}`.
pub fn trace_form(r: &Riemann<f64>, i: &Mat<f64>, tf: &Mat<f64>) -> Mat<f64> {
    let d = r.n;
    let bt = tf.transpose();
    let ib = i * tf;
    Mat::from_fn(d, d, |a, b| (&bt * &(&r.basis_endo(a, b) * &ib)).trace())
}

/// `c₁(F)` representative at a point of the fixed set.
pub fn f_form(space: &HPn, q: &[f64]) -> Result<Mat<f64>> {
    let action = CircleAction::uniform(space.n);
    let lc = space.levi_civita();
    let tf = fixed_tangent_space(&lc, &action.field(0), q);
    let i = unit_twistor(&space.twistor(&action, 0).mu_bar, space.n, q);
    let r = riemann_at(&lc, q, DerivEngine::Dual);
    Ok(trace_form(&r, &i, &tf).scale_f(1.0 / (4.0 * PI)))
}

/// `ι*c₁(M)` representative from a μ-connection.
pub fn m_form<M: Field, C: Connection, Q: QStructure>(mu: &MuConnection<M, C, Q>, q: &[f64]) -> Result<Mat<f64>> {
    mu.guard(q)?;
    let i = unit_twistor(&mu.datum.mu_bar, mu.q.n(), q);
    let ric = riemann_at(mu, q, DerivEngine::Dual).ricci();
    Ok(ric_i(&ric, &i).scale_f(-1.0 / (2.0 * PI)))
}

fn pair<W>(space: &HPn, form: W, i_mid: &Mat<f64>, grid: Grid) -> Result<CyclePairing>
where
    W: Fn(&[f64]) -> Result<Mat<f64>> + Sync,
{
    let line = fixed_line(space.n);
    let orientation = line_orientation(space, i_mid, &line, PI / 2.0, 1.0);
    let value = orientation * integrate_2form(form, &line, grid)?;
    Ok(CyclePairing { value, nodes: grid.ns * grid.nt, orientation })
}

fn mid_point(n: usize) -> Vec<f64> {
    fixed_line(n).point(PI / 2.0, 1.0)
}

/// `∫_line c₁(F)`.
pub fn c1_pairing_f(n: usize, grid: Grid) -> Result<CyclePairing> {
    let space = HPn::new(n)?;
    let action = CircleAction::uniform(n);
    let i_mid = unit_twistor(&space.twistor(&action, 0).mu_bar, n, &mid_point(n));
    pair(&space, |q| f_form(&space, q), &i_mid, grid)
}

/// `∫_line ι*c₁(M)` for an arbitrary twistor datum on ℍPⁿ.
pub fn c1_pairing_m<M: Field, C: Connection, Q: QStructure>(space: &HPn, mu: &MuConnection<M, C, Q>, grid: Grid) -> Result<CyclePairing> {
    let i_mid = unit_twistor(&mu.datum.mu_bar, space.n, &mid_point(space.n));
    pair(space, |q| m_form(mu, q), &i_mid, grid)
}

/// `∫_line ι*c₁(M)` for the twistor function of weights `(1, …, 1)`.
pub fn c1_pairing_m_restricted(n: usize, grid: Grid) -> Result<CyclePairing> {
    let space = HPn::new(n)?;
    let mu = space.mu_connection(&CircleAction::uniform(n), 0);
    c1_pairing_m(&space, &mu, grid)
}

/// `a·μ̄` for a positive function `a`, a change of gauge of the datum.
#[derive(Clone, Debug)]
pub struct Rescaled<M> {
    pub inner: M,
    /// `a = c · exp(Σ_k s_k sin x_k)`.
    pub constant: f64,
    pub wobble: Vec<f64>,
}

impl<M: Field> Field for Rescaled<M> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let e: T = self.wobble.iter().zip(x).map(|(&s, &xk)| xk.sin() * s).sum();
        let a = e.exp() * self.constant;
        self.inner.eval(x).into_iter().map(|v| v * a).collect()
    }
}

/// `½ d log a` for the function of [`Rescaled`].
#[derive(Clone, Debug)]
pub struct HalfLogGradient {
    pub wobble: Vec<f64>,
}

impl Field for HalfLogGradient {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.wobble.iter().zip(x).map(|(&s, &xk)| xk.cos() * (0.5 * s)).collect()
    }
}

pub type GaugedDatum<M, C, Q> = TwistorDatum<Rescaled<M>, Modified<C, HalfLogGradient, Q>>;

/// The gauge change `(∇, μ̄) ↦ (∇ + S^{½ d log a}, a·μ̄)`, which leaves the
/// μ-connection unchanged.
pub fn gauge_change<M: Field, C: Connection, Q: QStructure>(
    datum: TwistorDatum<M, C>,
    q: Q,
    constant: f64,
    wobble: Vec<f64>,
) -> GaugedDatum<M, C, Q> {
    let xi = HalfLogGradient { wobble: wobble.clone() };
    TwistorDatum { mu_bar: Rescaled { inner: datum.mu_bar, constant, wobble }, gauge: modify_connection(datum.gauge, xi, q) }
}

/// Outcome of the restriction relation `2n c₁(F) = (n+1) ι*c₁(M)`.
#[derive(Clone, Debug, Serialize)]
pub struct RestrictionReport {
    pub n: usize,
    pub c1_f: CyclePairing,
    pub c1_m: CyclePairing,
    /// `|2n·c₁(F) − (n+1)·ι*c₁(M)| / |ι*c₁(M)|`.
    pub defect: f64,
    /// Relative residual of `n Tr(R^F I) = −(n+1) Ric^μ_I` on `TF`.
    pub pointwise: f64,
    /// `‖W‖` at a point of the line, the flatness premise.
    pub weyl: f64,
}

/// Relative residual of the pointwise identity at `q ∈ F`.
pub fn pointwise_identity(space: &HPn, q: &[f64]) -> Result<f64> {
    let n = space.n;
    let action = CircleAction::uniform(n);
    let lc = space.levi_civita();
    let tf = fixed_tangent_space(&lc, &action.field(0), q);
    let mu = space.mu_connection(&action, 0);
    mu.guard(q)?;
    let i = unit_twistor(&mu.datum.mu_bar, n, q);
    let tr = trace_form(&riemann_at(&lc, q, DerivEngine::Dual), &i, &tf);
    let ric = ric_i(&riemann_at(&mu, q, DerivEngine::Dual).ricci(), &i);
    let (mut diff, mut size): (f64, f64) = (0.0, 0.0);
    for a in 0..tf.cols {
        for b in 0..tf.cols {
            let (x, y) = (tf.column(a), tf.column(b));
            let lhs = n as f64 * linalg::dot(&x, &tr.mul_vec(&y));
            let rhs = -((n + 1) as f64) * linalg::dot(&x, &ric.mul_vec(&y));
            diff = diff.max((lhs - rhs).abs());
            size = size.max(rhs.abs());
        }
    }
    Ok(diff / size.max(f64::MIN_POSITIVE))
}

pub fn restriction_check(n: usize, grid: Grid) -> Result<RestrictionReport> {
    let space = HPn::new(n)?;
    let c1_f = c1_pairing_f(n, grid)?;
    let c1_m = c1_pairing_m_restricted(n, grid)?;
    let defect = (2.0 * n as f64 * c1_f.value - (n + 1) as f64 * c1_m.value).abs() / c1_m.value.abs();
    let line = fixed_line(n);
    let mut pointwise: f64 = 0.0;
    for (chi, phi) in [(0.4, 0.3), (PI / 2.0, 1.0), (2.5, 4.0)] {
        pointwise = pointwise.max(pointwise_identity(&space, &line.point(chi, phi))?);
    }
    let q = line.point(1.1, 2.0);
    let weyl = QCurvature::at(&space.levi_civita(), &space.q_frame(), &q, DerivEngine::Dual, &space.chart(0)?)?.weyl_norm();
    Ok(RestrictionReport { n, c1_f, c1_m, defect, pointwise, weyl })
}

/// Relative change of a pairing between two grids.
pub fn grid_drift(coarse: f64, fine: f64) -> f64 {
    (fine - coarse).abs() / fine.abs()
}

/// Curvature of a μ-connection with the frame completed from `I = μ̄/‖μ̄‖`,
/// so that `Ω₁` is the `I`-component.
pub fn aligned_curvature<M: Field, C: Connection, Q: QStructure>(mu: &MuConnection<M, C, Q>, q: &[f64]) -> Result<QCurvature> {
    mu.guard(q)?;
    let n = mu.q.n();
    let i = unit_twistor(&mu.datum.mu_bar, n, q);
    let frame = complete_frame(&i, &flat_frame(n))?;
    let riemann = riemann_at(mu, q, DerivEngine::Dual);
    let ricci = riemann.ricci();
    let b = b_from_ricci(&ricci, &frame);
    Ok(QCurvature { riemann, ricci, b, frame })
}

/// Pointwise form of `4π² c₁(M)² = n²[Θ]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FourFormCheck {
    /// `max ‖Ω₁ − (1/n) Ric_I‖`.
    pub omega_vs_ricci: f64,
    /// `max ‖Ω₂‖, ‖Ω₃‖`.
    pub transverse: f64,
    /// `max |n²Θ − Ric_I ∧ Ric_I| / max |Ric_I ∧ Ric_I|` on coordinate quadruples.
    pub four_form: f64,
}

impl FourFormCheck {
    pub fn max(&self) -> f64 {
        self.omega_vs_ricci.max(self.transverse).max(self.four_form)
    }
}

/// `n²Θ` against `Ric_I ∧ Ric_I` from one curvature sample.
pub fn four_form_residual(curv: &QCurvature, ric_i: &Mat<f64>, n: usize) -> Result<FourFormCheck> {
    let om = curv.omega_forms()?;
    let d = curv.dim();
    let scaled = ric_i.scale_f(1.0 / n as f64);
    let omega_vs_ricci = (&om.commutator[0] - &scaled).max_abs();
    let transverse = om.commutator[1].max_abs().max(om.commutator[2].max_abs());
    let (mut diff, mut size): (f64, f64) = (0.0, 0.0);
    for a in 0..d {
        for b in (a + 1)..d {
            for c in (b + 1)..d {
                for e in (c + 1)..d {
                    let v: [Vec<f64>; 4] = [a, b, c, e].map(|k| unit(d, k));
                    let theta = om.characteristic_4form(&v[0], &v[1], &v[2], &v[3]);
                    let rr = crate::quaternionic::wedge_2_2(ric_i, ric_i, &v[0], &v[1], &v[2], &v[3]);
                    diff = diff.max(((n * n) as f64 * theta - rr).abs());
                    size = size.max(rr.abs());
                }
            }
        }
    }
    let four_form = if size > 0.0 { diff / size } else { diff };
    Ok(FourFormCheck { omega_vs_ricci, transverse, four_form })
}

/// The pointwise four-form identity at sample points, `n ≥ 2`.
pub fn char4form_consistency(n: usize, points: &[Vec<f64>]) -> Result<FourFormCheck> {
    if n < 2 {
        return Err(GeomError::InvalidDimension { dim: n, reason: "the four-form check needs n ≥ 2" });
    }
    let space = HPn::new(n)?;
    let mu = space.mu_connection(&CircleAction::uniform(n), 0);
    let mut out = FourFormCheck { omega_vs_ricci: 0.0, transverse: 0.0, four_form: 0.0 };
    for q in points {
        let curv = aligned_curvature(&mu, q)?;
        let r = four_form_residual(&curv, &ric_i(&curv.ricci, &curv.frame[0]), n)?;
        out.omega_vs_ricci = out.omega_vs_ricci.max(r.omega_vs_ricci);
        out.transverse = out.transverse.max(r.transverse);
        out.four_form = out.four_form.max(r.four_form);
    }
    Ok(out)
}
