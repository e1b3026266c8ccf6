//! Quaternionic structures and the tensors built from them.
//!
//! A [`QStructure`] supplies a local admissible frame `(I₁, I₂, I₃)` at every
//! chart point. On top of it live the Q-metric `(A, B) = −Tr(AB)/4n`, the
//! tensor `S^ξ` relating any two quaternionic connections, the `B` tensor and
//! Weyl tensor of a connection, the twistor-equation residual, the
//! μ-connection of a twistor function and the one-form `η` of a compatible
//! complex structure.

use crate::error::{GeomError, Result};
use crate::linalg::Mat;
use crate::quat::flat_frame;
use crate::scalar::Scalar;
use crate::tensor::{as_mat, nabla_endo_at, nabla_of_vector, riemann, unit, Chart, Christoffel, Connection, DerivEngine, Field, Riemann};
use serde::Serialize;

/// Admissible frame `(I₁, I₂, I₃)` at a point.
pub type Frame<T> = [Mat<T>; 3];

/// Local quaternionic structure on a chart of dimension `4n`.
pub trait QStructure: Sync {
    fn dim(&self) -> usize;
    fn frame<T: Scalar>(&self, x: &[T]) -> Frame<T>;

    fn n(&self) -> usize {
        self.dim() / 4
    }
}

impl<Q: QStructure> QStructure for &Q {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn frame<T: Scalar>(&self, x: &[T]) -> Frame<T> {
        (**self).frame(x)
    }
}

/// ℍⁿ with the constant frame of right multiplications by conjugate units.
#[derive(Clone, Copy, Debug)]
pub struct FlatQ(pub usize);

impl QStructure for FlatQ {
    fn dim(&self) -> usize {
        4 * self.0
    }
    fn frame<T: Scalar>(&self, _x: &[T]) -> Frame<T> {
        flat_frame(self.0).map(|m| m.lift())
    }
}

/// One member of a frame as an endomorphism field.
pub struct FrameMember<'a, Q>(pub &'a Q, pub usize);

impl<Q: QStructure> Field for FrameMember<'_, Q> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let [a, b, c] = self.0.frame(x);
        [a, b, c].into_iter().nth(self.1).expect("frame index < 3").data
    }
}

/// `(A, B) = −Tr(AB)/4n`.
pub fn q_inner<T: Scalar>(a: &Mat<T>, b: &Mat<T>, n: usize) -> T {
    -a.trace_of_product(b) / (4 * n) as f64
}

/// `Σ_α (A, I_α) I_α`.
pub fn q_part<T: Scalar>(a: &Mat<T>, f: &Frame<T>) -> Mat<T> {
    let n = a.rows / 4;
    let mut out = Mat::zeros(a.rows, a.cols);
    for i in f {
        out = &out + &i.scale(q_inner(a, i, n));
    }
    out
}

/// `A` minus its Q-part.
pub fn off_q<T: Scalar>(a: &Mat<T>, f: &Frame<T>) -> Mat<T> {
    a - &q_part(a, f)
}

/// Coefficients `(A, I_α)`.
pub fn q_coords<T: Scalar>(a: &Mat<T>, f: &Frame<T>) -> [T; 3] {
    let n = a.rows / 4;
    [q_inner(a, &f[0], n), q_inner(a, &f[1], n), q_inner(a, &f[2], n)]
}

/// Splitting `A = A_Q + A_Z` with a normalizer diagnostic.
#[derive(Clone, Debug)]
pub struct Projection {
    pub q_part: Mat<f64>,
    pub z_part: Mat<f64>,
    /// `max_α ‖[A_Z, I_α]‖`.
    pub normalizer_defect: f64,
    /// Set when the defect exceeds the tolerance, i.e. `A ∉ N(Q)`.
    pub not_in_normalizer: bool,
}

pub fn q_project(a: &Mat<f64>, f: &Frame<f64>, tol: f64) -> Projection {
    let q = q_part(a, f);
    let z = a - &q;
    let defect = f.iter().map(|i| z.commutator(i).norm()).fold(0.0, f64::max);
    Projection { q_part: q, z_part: z, normalizer_defect: defect, not_in_normalizer: defect > tol }
}

/// Quaternionic relations and Q-orthonormality defect of a frame.
pub fn frame_defect(f: &Frame<f64>) -> f64 {
    let d = f[0].rows;
    let id = Mat::<f64>::identity(d);
    let mut e: f64 = 0.0;
    for a in 0..3 {
        e = e.max((&(&f[a] * &f[a]) + &id).max_abs());
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        e = e.max((&(&f[a] * &f[b]) - &f[c]).max_abs());
        for b in 0..3 {
            let want = if a == b { 1.0 } else { 0.0 };
            e = e.max((q_inner(&f[a], &f[b], d / 4) - want).abs());
        }
    }
    e
}

/// `S^ξ_X Y = ξ(X)Y + ξ(Y)X − Σ_α (ξ(I_αX) I_αY + ξ(I_αY) I_αX)`.
pub fn s_xi<T: Scalar>(xi: &[T], f: &Frame<T>, x: &[T], y: &[T]) -> Vec<T> {
    let dot = |a: &[T], b: &[T]| -> T { a.iter().zip(b).map(|(&p, &q)| p * q).sum() };
    let (xx, xy) = (dot(xi, x), dot(xi, y));
    let mut out: Vec<T> = y.iter().zip(x).map(|(&a, &b)| a * xx + b * xy).collect();
    for i in f {
        let (ix, iy) = (i.mul_vec(x), i.mul_vec(y));
        let (cx, cy) = (dot(xi, &ix), dot(xi, &iy));
        for k in 0..out.len() {
            out[k] -= cx * iy[k] + cy * ix[k];
        }
    }
    out
}

/// `S^ξ` as Christoffel-type symbols `(S_{e_i} e_j)^k`.
pub fn s_xi_symbols<T: Scalar>(xi: &[T], f: &Frame<T>) -> Christoffel<T> {
    let n = xi.len();
    let mut out = Christoffel::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = s_xi(xi, f, &unit::<T>(n, i), &unit::<T>(n, j));
            for k in 0..n {
                out.set(k, i, j, v[k]);
                out.set(k, j, i, v[k]);
            }
        }
    }
    out
}

/// `∇ + S^ξ` for a one-form field `ξ`.
#[derive(Clone, Debug)]
pub struct Modified<C, X, Q> {
    pub base: C,
    pub xi: X,
    pub q: Q,
}

pub fn modify_connection<C: Connection, X: Field, Q: QStructure>(base: C, xi: X, q: Q) -> Modified<C, X, Q> {
    Modified { base, xi, q }
}

impl<C: Connection, X: Field, Q: QStructure> Connection for Modified<C, X, Q> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn christoffel<T: Scalar>(&self, x: &[T]) -> Christoffel<T> {
        let xi = self.xi.eval(x);
        self.base.christoffel(x).add(&s_xi_symbols(&xi, &self.q.frame(x)))
    }
}

/// `Π_h(θ)(X, Y) = ¼(θ(X, Y) + Σ_α θ(I_αX, I_αY))`.
pub fn pi_h(theta: &Mat<f64>, f: &Frame<f64>) -> Mat<f64> {
    let mut out = theta.clone();
    for i in f {
        out = &out + &(&(&i.transpose() * theta) * i);
    }
    out.scale_f(0.25)
}

/// `B = Ric^a/4(n+1) + Ric^s/4n − Π_h(Ric^s)/2n(n+2)`.
pub fn b_from_ricci(ric: &Mat<f64>, f: &Frame<f64>) -> Mat<f64> {
    let n = (ric.rows / 4) as f64;
    let t = ric.transpose();
    let sym = (ric + &t).scale_f(0.5);
    let anti = (ric - &t).scale_f(0.5);
    let a = anti.scale_f(1.0 / (4.0 * (n + 1.0)));
    let s = sym.scale_f(1.0 / (4.0 * n));
    let p = pi_h(&sym, f).scale_f(1.0 / (2.0 * n * (n + 2.0)));
    &(&a + &s) - &p
}

/// Curvature data of a connection at one point, relative to a Q-frame.
#[derive(Clone, Debug)]
pub struct QCurvature {
    pub riemann: Riemann<f64>,
    pub ricci: Mat<f64>,
    pub b: Mat<f64>,
    pub frame: Frame<f64>,
}

/// The three curvature two-forms of a quaternionic connection.
#[derive(Clone, Debug)]
pub struct OmegaForms {
    /// Read off from `[R_{X,Y}, I_α] = Ω_γ I_β − Ω_β I_γ`.
    pub commutator: [Mat<f64>; 3],
    /// `Ω_α(X, Y) = 2(B(X, I_αY) − B(Y, I_αX))`.
    pub b_form: [Mat<f64>; 3],
    /// Largest entrywise difference between the two.
    pub agreement: f64,
}

impl QCurvature {
    pub fn at<C: Connection, Q: QStructure>(c: &C, q: &Q, x: &[f64], engine: DerivEngine, chart: &Chart) -> Result<Self> {
        let riemann = riemann(c, x, engine, chart)?;
        let ricci = riemann.ricci();
        let frame = q.frame(x);
        let b = b_from_ricci(&ricci, &frame);
        Ok(QCurvature { riemann, ricci, b, frame })
    }

    pub fn dim(&self) -> usize {
        self.riemann.n
    }

    /// `R^B_{X,Y} = S^{B(Y,·)}_X − S^{B(X,·)}_Y`.
    pub fn r_b(&self, xv: &[f64], yv: &[f64]) -> Mat<f64> {
        let bt = self.b.transpose();
        let (by, bx) = (bt.mul_vec(yv), bt.mul_vec(xv));
        let d = self.dim();
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let e = unit::<f64>(d, j);
                let p = s_xi(&by, &self.frame, xv, &e);
                let m = s_xi(&bx, &self.frame, yv, &e);
                p.iter().zip(&m).map(|(a, b)| a - b).collect()
            })
            .collect();
        Mat::from_columns(&cols)
    }

    /// Weyl tensor `W_{X,Y} = R_{X,Y} − R^B_{X,Y}`.
    pub fn weyl(&self, xv: &[f64], yv: &[f64]) -> Mat<f64> {
        &self.riemann.endo(xv, yv) - &self.r_b(xv, yv)
    }

    /// `max_{i<j} ‖W_{e_i, e_j}‖` over coordinate pairs (Frobenius).
    pub fn weyl_norm(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                m = m.max(self.weyl(&unit(d, i), &unit(d, j)).norm());
            }
        }
        m
    }

    pub fn omega_forms(&self) -> Result<OmegaForms> {
        if frame_defect(&self.frame) > 1e-6 {
            return Err(GeomError::FrameDegenerate);
        }
        let d = self.dim();
        let n = d / 4;
        let f = &self.frame;
        let mut com = [Mat::zeros(d, d), Mat::zeros(d, d), Mat::zeros(d, d)];
        for i in 0..d {
            for j in 0..d {
                let r = self.riemann.basis_endo(i, j);
                let c1 = r.commutator(&f[0]);
                let c2 = r.commutator(&f[1]);
                com[0][(i, j)] = q_inner(&c2, &f[2], n);
                com[1][(i, j)] = -q_inner(&c1, &f[2], n);
                com[2][(i, j)] = q_inner(&c1, &f[1], n);
            }
        }
        let b_form = [0, 1, 2].map(|a| {
            let bi = &self.b * &f[a];
            (&bi - &bi.transpose()).scale_f(2.0)
        });
        let agreement = (0..3).map(|a| (&com[a] - &b_form[a]).max_abs()).fold(0.0, f64::max);
        Ok(OmegaForms { commutator: com, b_form, agreement })
    }
}

impl OmegaForms {
    /// `Θ = Σ_α Ω_α ∧ Ω_α` on four vectors.
    pub fn characteristic_4form(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        self.commutator.iter().map(|o| wedge_2_2(o, o, x, y, z, w)).sum()
    }
}

fn form2(o: &Mat<f64>, a: &[f64], b: &[f64]) -> f64 {
    crate::linalg::dot(a, &o.mul_vec(b))
}

/// `(ω ∧ η)(X, Y, Z, W)` for two-forms given as antisymmetric matrices.
pub fn wedge_2_2(om: &Mat<f64>, et: &Mat<f64>, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    form2(om, x, y) * form2(et, z, w) - form2(om, x, z) * form2(et, y, w)
        + form2(om, x, w) * form2(et, y, z)
        + form2(om, y, z) * form2(et, x, w)
        - form2(om, y, w) * form2(et, x, z)
        + form2(om, z, w) * form2(et, x, y)
}

/// A twistor datum: a Q-valued endomorphism field together with the gauge
/// connection in which the twistor equation is written.
#[derive(Clone, Debug)]
pub struct TwistorDatum<M, C> {
    pub mu_bar: M,
    pub gauge: C,
}

/// Outcome of [`check_twistor`].
#[derive(Clone, Debug)]
pub struct TwistorCheck {
    /// `max |c_β(e_j) − ξ(I_β e_j)|` over `β = 2, 3` and basis vectors.
    pub equation: f64,
    /// `max_j ‖∇_{e_j} μ̄ mod Q‖`.
    pub off_q: f64,
    /// Corresponding one-form reconstructed from the first slot.
    pub xi: Vec<f64>,
    /// `c_α(e_j) = (∇_{e_j} μ̄, I_α)`.
    pub c: [Vec<f64>; 3],
}

impl TwistorCheck {
    pub fn residual(&self) -> f64 {
        self.equation.max(self.off_q)
    }
}

/// Residual of `∇μ̄ = Σ (ξ ∘ I_α) ⊗ I_α` at `x`.
pub fn check_twistor<M: Field, C: Connection, Q: QStructure>(
    t: &TwistorDatum<M, C>,
    q: &Q,
    x: &[f64],
    engine: DerivEngine,
) -> TwistorCheck {
    let d = q.dim();
    let n = d / 4;
    let f = q.frame(x);
    let mut c = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut off: f64 = 0.0;
    for j in 0..d {
        let nab = nabla_endo_at(&t.gauge, &t.mu_bar, x, &unit(d, j), engine);
        for a in 0..3 {
            c[a][j] = q_inner(&nab, &f[a], n);
        }
        off = off.max(off_q(&nab, &f).norm());
    }
    // ξ(Z) = −c₁(I₁Z)
    let xi: Vec<f64> = f[0].transpose().mul_vec(&c[0]).iter().map(|v| -v).collect();
    let mut eq: f64 = 0.0;
    for b in 1..3 {
        let xib = f[b].transpose().mul_vec(&xi);
        for j in 0..d {
            eq = eq.max((c[b][j] - xib[j]).abs());
        }
    }
    TwistorCheck { equation: eq, off_q: off, xi, c }
}

/// `‖μ̄‖` in the Q-metric, as a scalar field.
pub struct QNorm<'a, M>(pub &'a M, pub usize);

impl<M: Field> Field for QNorm<'_, M> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let m = as_mat(self.0.eval(x), 4 * self.1);
        vec![q_inner(&m, &m, self.1).sqrt()]
    }
}

/// Threshold below which the twistor function counts as vanishing.
pub const ZERO_TWISTOR: f64 = 1e-8;

/// The μ-connection `∇ + S^α` with `α = −½ d log‖μ̄‖`.
#[derive(Clone, Debug)]
pub struct MuConnection<M, C, Q> {
    pub datum: TwistorDatum<M, C>,
    pub q: Q,
    pub engine: DerivEngine,
}

pub fn mu_connection<M: Field, C: Connection, Q: QStructure>(
    datum: TwistorDatum<M, C>,
    q: Q,
    engine: DerivEngine,
) -> MuConnection<M, C, Q> {
    MuConnection { datum, q, engine }
}

impl<M: Field, C: Connection, Q: QStructure> MuConnection<M, C, Q> {
    /// `α = −½ d log‖μ̄‖` at `x`.
    pub fn alpha<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let nf = QNorm(&self.datum.mu_bar, self.q.n());
        let norm = nf.eval(x)[0];
        self.engine.partials(&nf, x).into_iter().map(|d| d[0] / norm * -0.5).collect()
    }

    /// `ZeroTwistor` if `μ̄` vanishes at `x`.
    pub fn guard(&self, x: &[f64]) -> Result<()> {
        let norm = QNorm(&self.datum.mu_bar, self.q.n()).eval(x)[0];
        if norm < ZERO_TWISTOR || !norm.is_finite() {
            Err(GeomError::ZeroTwistor { norm })
        } else {
            Ok(())
        }
    }

    /// Complex structure `I = μ̄/‖μ̄‖` as a field.
    pub fn complex_structure(&self) -> UnitTwistor<'_, M> {
        UnitTwistor(&self.datum.mu_bar, self.q.n())
    }
}

impl<M: Field, C: Connection, Q: QStructure> Connection for MuConnection<M, C, Q> {
    fn dim(&self) -> usize {
        self.datum.gauge.dim()
    }
    fn christoffel<T: Scalar>(&self, x: &[T]) -> Christoffel<T> {
        let alpha = self.alpha(x);
        self.datum.gauge.christoffel(x).add(&s_xi_symbols(&alpha, &self.q.frame(x)))
    }
}

/// `μ̄/‖μ̄‖` as an endomorphism field.
pub struct UnitTwistor<'a, M>(pub &'a M, pub usize);

impl<M: Field> Field for UnitTwistor<'_, M> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let m = as_mat(self.0.eval(x), 4 * self.1);
        let norm = q_inner(&m, &m, self.1).sqrt();
        m.scale(norm.recip()).data
    }
}

/// Completes a unit `I ∈ Q` to an admissible frame `(I, I₂, I₃)` by
/// Gram-Schmidt against the reference frame. `I₂` comes from the first
/// reference element whose component orthogonal to `I` has norm above ½,
/// so the choice is locally constant and the result smooth.
pub fn complete_frame<T: Scalar>(i1: &Mat<T>, reference: &Frame<T>) -> Result<Frame<T>> {
    let n = i1.rows / 4;
    for r in reference {
        let perp = r - &i1.scale(q_inner(r, i1, n));
        let len = q_inner(&perp, &perp, n).sqrt();
        if len.re() > 0.5 {
            let i2 = perp.scale(len.recip());
            let i3 = i1 * &i2;
            return Ok([i1.clone(), i2, i3]);
        }
    }
    Err(GeomError::FrameDegenerate)
}

/// Frame field completed from a complex-structure field.
pub struct CompletedFrame<'a, I, Q> {
    pub i: &'a I,
    pub q: &'a Q,
}

impl<I: Field, Q: QStructure> CompletedFrame<'_, I, Q> {
    pub fn frame<T: Scalar>(&self, x: &[T]) -> Frame<T> {
        let d = self.q.dim();
        let i1 = as_mat(self.i.eval(x), d);
        complete_frame(&i1, &self.q.frame(x)).unwrap_or_else(|_| [0, 1, 2].map(|_| Mat::from_fn(d, d, |_, _| T::cst(f64::NAN))))
    }
}

/// Any frame-valued field (`3·d²` components).
pub trait FrameField: Sync {
    fn dim(&self) -> usize;
    fn frame<T: Scalar>(&self, x: &[T]) -> Frame<T>;
}

impl<I: Field, Q: QStructure> FrameField for CompletedFrame<'_, I, Q> {
    fn dim(&self) -> usize {
        self.q.dim()
    }
    fn frame<T: Scalar>(&self, x: &[T]) -> Frame<T> {
        CompletedFrame::frame(self, x)
    }
}

/// The frame of a Q-structure viewed as a frame field.
pub struct StructureFrame<'a, Q>(pub &'a Q);

impl<Q: QStructure> FrameField for StructureFrame<'_, Q> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn frame<T: Scalar>(&self, x: &[T]) -> Frame<T> {
        self.0.frame(x)
    }
}

struct Member<'a, F>(&'a F, usize);

impl<F: FrameField> Field for Member<'_, F> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let [a, b, c] = self.0.frame(x);
        [a, b, c].into_iter().nth(self.1).expect("frame index < 3").data
    }
}

/// Connection one-forms `ω_α` of a frame field, from
/// `∇I_α = ω_γ ⊗ I_β − ω_β ⊗ I_γ`.
pub fn connection_forms<C: Connection, F: FrameField, T: Scalar>(c: &C, ff: &F, x: &[T], engine: DerivEngine) -> [Vec<T>; 3] {
    let d = ff.dim();
    let n = d / 4;
    let f = ff.frame(x);
    let mut w = [vec![T::zero(); d], vec![T::zero(); d], vec![T::zero(); d]];
    for j in 0..d {
        let e = unit::<T>(d, j);
        let n1 = nabla_endo_at(c, &Member(ff, 0), x, &e, engine);
        let n2 = nabla_endo_at(c, &Member(ff, 1), x, &e, engine);
        w[0][j] = q_inner(&n2, &f[2], n);
        w[1][j] = -q_inner(&n1, &f[2], n);
        w[2][j] = q_inner(&n1, &f[1], n);
    }
    w
}

/// `η = ω₂ ∘ I₂ + ω₃ ∘ I₃` for the given frame field.
pub fn eta_from_frame<C: Connection, F: FrameField, T: Scalar>(c: &C, ff: &F, x: &[T], engine: DerivEngine) -> Vec<T> {
    let f = ff.frame(x);
    let [_, w2, w3] = connection_forms(c, ff, x, engine);
    let a = f[1].transpose().mul_vec(&w2);
    let b = f[2].transpose().mul_vec(&w3);
    a.into_iter().zip(b).map(|(p, q)| p + q).collect()
}

/// `η^∇_I` at `x`, completing `I` to a frame against `Q`.
pub fn eta_form<C: Connection, I: Field, Q: QStructure>(c: &C, i: &I, q: &Q, x: &[f64], engine: DerivEngine) -> Result<Vec<f64>> {
    let d = q.dim();
    complete_frame(&as_mat(i.eval(x), d), &q.frame(x))?;
    Ok(eta_from_frame(c, &CompletedFrame { i, q }, x, engine))
}

/// `η` as a one-form field, so that `dη` can be taken.
pub struct EtaField<'a, C, I, Q> {
    pub c: &'a C,
    pub i: &'a I,
    pub q: &'a Q,
    pub engine: DerivEngine,
}

impl<C: Connection, I: Field, Q: QStructure> Field for EtaField<'_, C, I, Q> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        eta_from_frame(self.c, &CompletedFrame { i: self.i, q: self.q }, x, self.engine)
    }
}

/// Exterior derivative of a one-form field, `(dη)_{ij} = ∂_i η_j − ∂_j η_i`.
pub fn exterior_d<F: Field>(eta: &F, x: &[f64], engine: DerivEngine) -> Mat<f64> {
    let p = engine.partials(eta, x);
    let d = x.len();
    Mat::from_fn(d, d, |i, j| p[i][j] - p[j][i])
}

/// `max_{α, j} ‖∇_{e_j} I_α mod Q‖`: zero iff the connection preserves Q.
pub fn q_preservation_residual<C: Connection, Q: QStructure>(c: &C, q: &Q, x: &[f64], engine: DerivEngine) -> f64 {
    let d = q.dim();
    let f = q.frame(x);
    let mut m: f64 = 0.0;
    for a in 0..3 {
        for j in 0..d {
            let nab = nabla_endo_at(c, &FrameMember(q, a), x, &unit(d, j), engine);
            m = m.max(off_q(&nab, &f).norm());
        }
    }
    m
}

/// `∇X` as an endomorphism field.
#[derive(Clone, Debug)]
pub struct NablaField<C, X> {
    pub conn: C,
    pub field: X,
    pub engine: DerivEngine,
}

impl<C: Connection, X: Field> Field for NablaField<C, X> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        nabla_of_vector(&self.conn, &self.field, x, self.engine).data
    }
}

/// `f_Q`, the Q-part of `∇X`, as an endomorphism field.
#[derive(Clone, Debug)]
pub struct FqField<C, X, Q> {
    pub nabla: NablaField<C, X>,
    pub q: Q,
}

impl<C: Connection, X: Field, Q: QStructure> Field for FqField<C, X, Q> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let d = self.q.dim();
        q_part(&as_mat(self.nabla.eval(x), d), &self.q.frame(x)).data
    }
}

/// Residuals of first-order consequences of the twistor equation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwistorIdentities {
    /// `max_j |d‖μ̄‖(e_j) − ξ(I e_j)|`.
    pub norm_gradient: f64,
    /// `max_j |η^∇_I(e_j) − 2 d log‖μ̄‖(e_j)|`.
    pub eta: f64,
}

/// `d‖μ̄‖ = ξ ∘ I` and `η^∇_I = 2 d log‖μ̄‖` for `I = μ̄/‖μ̄‖`.
pub fn twistor_identities<M: Field, C: Connection, Q: QStructure>(
    t: &TwistorDatum<M, C>,
    q: &Q,
    x: &[f64],
    engine: DerivEngine,
) -> Result<TwistorIdentities> {
    let n = q.n();
    let nf = QNorm(&t.mu_bar, n);
    let norm = nf.eval(x)[0];
    if norm < ZERO_TWISTOR {
        return Err(GeomError::ZeroTwistor { norm });
    }
    let dn: Vec<f64> = engine.partials(&nf, x).into_iter().map(|v| v[0]).collect();
    let check = check_twistor(t, q, x, engine);
    let unit_field = UnitTwistor(&t.mu_bar, n);
    let i = as_mat(unit_field.eval(x), q.dim());
    let xi_i = i.transpose().mul_vec(&check.xi);
    let eta = eta_form(&t.gauge, &unit_field, q, x, engine)?;
    let mut out = TwistorIdentities { norm_gradient: 0.0, eta: 0.0 };
    for j in 0..x.len() {
        out.norm_gradient = out.norm_gradient.max((dn[j] - xi_i[j]).abs());
        out.eta = out.eta.max((eta[j] - 2.0 * dn[j] / norm).abs());
    }
    Ok(out)
}

/// Structure of a μ-connection at one point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MuStructure {
    /// `max_j ‖∇^μ_{e_j} I‖` for `I = μ̄/‖μ̄‖`.
    pub nabla_i: f64,
    /// `‖Ric − Ricᵀ‖`.
    pub ricci_skew: f64,
    /// `max_{β=2,3} ‖Ric(I_β·, I_β·) + Ric‖` in a frame completed from `I`.
    pub anti_invariance: f64,
    /// `‖Π_h Ric‖`.
    pub pi_h: f64,
    /// `‖Ric‖`, for scale.
    pub ricci_size: f64,
}

pub fn mu_structure<M: Field, C: Connection, Q: QStructure>(mu: &MuConnection<M, C, Q>, x: &[f64], chart: &Chart) -> Result<MuStructure> {
    mu.guard(x)?;
    let d = mu.q.dim();
    let unit_field = mu.complex_structure();
    let nabla_i = (0..d).map(|j| nabla_endo_at(mu, &unit_field, x, &unit(d, j), mu.engine).norm()).fold(0.0, f64::max);
    let ric = riemann(mu, x, mu.engine, chart)?.ricci();
    let f = complete_frame(&as_mat(unit_field.eval(x), d), &mu.q.frame(x))?;
    let anti_invariance = f[1..].iter().map(|i| (&(&(&i.transpose() * &ric) * i) + &ric).norm()).fold(0.0, f64::max);
    Ok(MuStructure {
        nabla_i,
        ricci_skew: (&ric - &ric.transpose()).norm(),
        anti_invariance,
        pi_h: pi_h(&ric, &f).norm(),
        ricci_size: ric.norm(),
    })
}

impl QCurvature {
    /// `max_{i<j} ‖W_{e_i,e_j} − W'_{e_i,e_j}‖` against another curvature
    /// sample at the same point.
    pub fn weyl_distance(&self, other: &QCurvature) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                let (x, y) = (unit(d, i), unit(d, j));
                m = m.max((&self.weyl(&x, &y) - &other.weyl(&x, &y)).norm());
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{ConstField, Flat};
    use proptest::prelude::*;

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0..2.0f64, d)
    }

    #[test]
    fn s_xi_examples() {
        let f = FlatQ(1).frame::<f64>(&[0.0; 4]);
        let e1 = unit::<f64>(4, 0);
        assert!(s_xi(&[0.0; 4], &f, &e1, &e1).iter().all(|v| *v == 0.0));
        assert_eq!(s_xi(&e1, &f, &e1, &e1), vec![2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn q_inner_examples() {
        let f = FlatQ(2).frame::<f64>(&[0.0; 8]);
        assert_eq!(q_inner(&f[0], &f[0], 2), 1.0);
        assert_eq!(q_inner(&f[0], &f[1], 2), 0.0);
        assert!(frame_defect(&f) < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let f = FlatQ(1).frame::<f64>(&[0.0; 4]);
        let p = q_project(&f[1], &f, 1e-10);
        assert!((&p.q_part - &f[1]).max_abs() < 1e-15 && p.z_part.max_abs() < 1e-15);
        let id = Mat::<f64>::identity(4);
        let p = q_project(&id, &f, 1e-10);
        assert!(p.q_part.max_abs() < 1e-15 && !p.not_in_normalizer);
        // a generic matrix is not in the normalizer
        let g = Mat::from_fn(4, 4, |i, j| (i * 3 + j * j) as f64 * 0.1);
        assert!(q_project(&g, &f, 1e-6).not_in_normalizer);
    }

    #[test]
    fn pi_h_of_rank_one_form_matches_direct_sum() {
        let f = FlatQ(1).frame::<f64>(&[0.0; 4]);
        let a = unit::<f64>(4, 0);
        let theta = Mat::from_fn(4, 4, |i, j| a[i] * a[j]);
        let p = pi_h(&theta, &f);
        // oracle: ¼ Σ over a and its images a∘I_α
        let mut direct = Mat::zeros(4, 4);
        let imgs: Vec<Vec<f64>> = std::iter::once(a.clone()).chain(f.iter().map(|i| i.transpose().mul_vec(&a))).collect();
        for v in &imgs {
            direct = &direct + &Mat::from_fn(4, 4, |i, j| 0.25 * v[i] * v[j]);
        }
        assert!((&p - &direct).max_abs() < 1e-15);
        assert!((&pi_h(&Mat::identity(4), &f) - &Mat::identity(4)).max_abs() < 1e-15);
    }

    #[test]
    fn parallel_twistor_has_zero_residual() {
        let q = FlatQ(1);
        let mu = ConstField(q.frame::<f64>(&[0.0; 4])[0].data.clone());
        let t = TwistorDatum { mu_bar: mu, gauge: Flat(4) };
        let r = check_twistor(&t, &q, &[0.3, 0.1, -0.2, 0.5], DerivEngine::Dual);
        assert_eq!(r.residual(), 0.0);
        assert!(r.xi.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn flat_model_has_no_weyl_or_omega() {
        let chart = Chart::new(4, "H").unwrap();
        let k = QCurvature::at(&Flat(4), &FlatQ(1), &[0.1, 0.2, 0.3, 0.4], DerivEngine::Dual, &chart).unwrap();
        assert_eq!(k.weyl_norm(), 0.0);
        let o = k.omega_forms().unwrap();
        assert!(o.commutator.iter().all(|m| m.max_abs() == 0.0));
        let e = |i| unit::<f64>(4, i);
        assert_eq!(o.characteristic_4form(&e(0), &e(1), &e(2), &e(3)), 0.0);
    }

    #[test]
    fn frame_completion_is_admissible() {
        let f = FlatQ(2).frame::<f64>(&[0.0; 8]);
        // a rotated unit element of Q
        let (c, s) = (0.6_f64, 0.8_f64);
        let i = &f[0].scale(c) + &f[2].scale(s);
        let done = complete_frame(&i, &f).unwrap();
        assert!(frame_defect(&done) < 1e-14);
    }

    proptest! {
        #[test]
        fn s_xi_trace_and_symmetry(xi in vec_strategy(8), x in vec_strategy(8), y in vec_strategy(8)) {
            let f = FlatQ(2).frame::<f64>(&[0.0; 8]);
            let a = s_xi(&xi, &f, &x, &y);
            let b = s_xi(&xi, &f, &y, &x);
            prop_assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
            // Tr(Y ↦ S_X Y) = 4(n+1) ξ(X)
            let tr: f64 = (0..8).map(|j| s_xi(&xi, &f, &x, &unit(8, j))[j]).sum();
            let xx: f64 = xi.iter().zip(&x).map(|(p, q)| p * q).sum();
            prop_assert!((tr - 12.0 * xx).abs() < 1e-12 * (1.0 + xx.abs()));
        }

        #[test]
        fn q_inner_symmetric(a in vec_strategy(16), b in vec_strategy(16)) {
            let (a, b) = (Mat::from_vec(4, 4, a), Mat::from_vec(4, 4, b));
            prop_assert!((q_inner(&a, &b, 1) - q_inner(&b, &a, 1)).abs() < 1e-14);
        }

        #[test]
        fn pi_h_is_idempotent(t in vec_strategy(16)) {
            let f = FlatQ(1).frame::<f64>(&[0.0; 4]);
            let t = Mat::from_vec(4, 4, t);
            let once = pi_h(&t, &f);
            prop_assert!((&pi_h(&once, &f) - &once).max_abs() < 1e-12);
        }

        #[test]
        fn four_form_is_alternating(o in vec_strategy(16), x in vec_strategy(4), y in vec_strategy(4), z in vec_strategy(4)) {
            let o = Mat::from_vec(4, 4, o);
            let om = &o - &o.transpose();
            prop_assert!(wedge_2_2(&om, &om, &x, &y, &z, &x).abs() < 1e-10);
        }
    }
}
