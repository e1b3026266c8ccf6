//! Quaternionic projective space in affine charts.
//!
//! Points of ℍPⁿ are right-quaternionic lines `[z] = [zλ]` in ℍ^{n+1}. Chart
//! `a` covers `z_a ≠ 0` with coordinates `q = (z_b z_a⁻¹)_{b≠a}` in ℝ^{4n},
//! and its unit section is `z(q) = (…, 1, …, q, …)/ρ` with `ρ² = 1 + |q|²`.
//! The metric is the one induced from the unit sphere by horizontal
//! projection, so every chart is isometric to every other by a coordinate
//! permutation and the same metric, connection and frame formulas serve all
//! of them. Circle actions `z ↦ (e^{ip_bθ} z_b)` differ between charts only by
//! the order of their weights.

use crate::error::{GeomError, Result};
use crate::linalg::{self, Mat};
use crate::quat::{flat_frame, right_mult_block, HVec, Quat, Q64};
use crate::quaternionic::{
    frame_defect, mu_connection, q_inner, q_part, q_project, s_xi, FqField, Frame, MuConnection, NablaField, Projection, QStructure,
    TwistorDatum,
};
use crate::scalar::Scalar;
use crate::tensor::{
    as_mat, lie_endo_at, nabla_endo_at, nabla_of_vector, riemann_at, unit, Chart, Christoffel, Connection, DerivEngine, Field, LeviCivita,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// ℍPⁿ with `n ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HPn {
    pub n: usize,
}

impl HPn {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GeomError::InvalidDimension { dim: 0, reason: "projective space needs n ≥ 1" });
        }
        Ok(HPn { n })
    }

    pub fn dim(&self) -> usize {
        4 * self.n
    }

    /// Chart `z_index ≠ 0`; every chart is all of ℝ^{4n}.
    pub fn chart(&self, index: usize) -> Result<Chart> {
        if index > self.n {
            return Err(GeomError::InvalidDimension { dim: index, reason: "chart index exceeds n" });
        }
        Chart::new(self.dim(), format!("z{index}≠0"))
    }

    pub fn metric(&self) -> HpnMetric {
        HpnMetric { n: self.n }
    }

    /// Levi-Civita connection in closed form.
    pub fn levi_civita(&self) -> HpnLeviCivita {
        HpnLeviCivita { n: self.n }
    }

    /// Levi-Civita connection computed from derivatives of the metric.
    pub fn levi_civita_from_metric(&self, engine: DerivEngine) -> LeviCivita<HpnMetric> {
        LeviCivita::new(self.metric(), self.dim(), engine)
    }

    pub fn q_frame(&self) -> HpnFrame {
        HpnFrame { n: self.n }
    }

    /// `∇X` for the Levi-Civita connection.
    pub fn nabla_field(&self, action: &CircleAction, chart: usize) -> NablaField<HpnLeviCivita, ActionField> {
        NablaField { conn: self.levi_civita(), field: action.field(chart), engine: DerivEngine::Dual }
    }

    /// `μ̄ = f_Q` of `∇X` for the Levi-Civita connection, with `∇` as its gauge.
    pub fn twistor(&self, action: &CircleAction, chart: usize) -> TwistorDatum<HpnTwistor, HpnLeviCivita> {
        TwistorDatum { mu_bar: FqField { nabla: self.nabla_field(action, chart), q: self.q_frame() }, gauge: self.levi_civita() }
    }

    /// The μ-connection of [`HPn::twistor`].
    pub fn mu_connection(&self, action: &CircleAction, chart: usize) -> HpnMuConnection {
        mu_connection(self.twistor(action, chart), self.q_frame(), DerivEngine::Dual)
    }
}

/// The twistor function of a circle action, `f_Q` of the Levi-Civita `∇X`.
pub type HpnTwistor = FqField<HpnLeviCivita, ActionField, HpnFrame>;
pub type HpnMuConnection = MuConnection<HpnTwistor, HpnLeviCivita, HpnFrame>;

fn quat_at<T: Scalar>(q: &[T], l: usize) -> Quat<T> {
    Quat::from_slice(&q[4 * l..4 * l + 4])
}

fn basis_quat<T: Scalar>(m: usize) -> Quat<T> {
    Quat::from_slice(&unit::<T>(4, m))
}

fn rho_sq<T: Scalar>(q: &[T]) -> T {
    q.iter().map(|&v| v * v).sum::<T>() + 1.0
}

/// Unit section `z(q)` of chart `index`.
pub fn section<T: Scalar>(q: &[T], index: usize) -> HVec<T> {
    let n = q.len() / 4;
    let inv = rho_sq(q).sqrt().recip();
    let mut entries: Vec<Quat<T>> = (0..n).map(|l| quat_at(q, l).scale(inv)).collect();
    entries.insert(index, Quat::new(inv, T::zero(), T::zero(), T::zero()));
    HVec::new(entries)
}

/// Coordinates of `[z]` in chart `index`.
pub fn chart_coords(z: &HVec<f64>, index: usize) -> Result<Vec<f64>> {
    let za = z.entries[index];
    if za.norm() <= 1e-12 * z.norm_sq().sqrt() {
        return Err(GeomError::ChartEscape);
    }
    let inv = za.inverse();
    Ok(z.entries.iter().enumerate().filter(|(b, _)| *b != index).flat_map(|(_, &zb)| (zb * inv).to_array()).collect())
}

/// Coordinates of a point of chart `from` in chart `to`.
pub fn change_chart(q: &[f64], from: usize, to: usize) -> Result<Vec<f64>> {
    chart_coords(&section(q, from), to)
}

/// `sin` of the Fubini-Study angle between two lines, computed as the
/// length of the part of `ŵ` orthogonal to `ẑ·ℍ` so it stays accurate near 0.
pub fn line_distance(z: &HVec<f64>, w: &HVec<f64>) -> f64 {
    let zh = z.right_mul(Q64::one().scale(z.norm_sq().sqrt().recip()));
    let wh = w.right_mul(Q64::one().scale(w.norm_sq().sqrt().recip()));
    let h = zh.hermitian(&wh);
    let perp: f64 = wh.entries.iter().zip(&zh.entries).map(|(&b, &a)| (b - a * h).norm_sq()).sum();
    perp.sqrt().min(1.0)
}

/// A point together with the chart it is expressed in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartPoint {
    pub chart: usize,
    pub q: Vec<f64>,
}

impl ChartPoint {
    pub fn line(&self) -> HVec<f64> {
        section(&self.q, self.chart)
    }

    /// The line `[z]` in the chart where `|z_a|` is largest.
    pub fn from_line(z: &HVec<f64>) -> ChartPoint {
        let a = (0..z.len()).max_by(|&a, &b| z.entries[a].norm().total_cmp(&z.entries[b].norm())).unwrap_or(0);
        ChartPoint { chart: a, q: chart_coords(z, a).expect("largest entry is nonzero") }
    }

    pub fn best_chart(&self) -> ChartPoint {
        ChartPoint::from_line(&self.line())
    }
}

/// `H = d(hor ∘ z)`, the `(4n+4) × 4n` matrix taking a chart vector to its
/// horizontal lift at `z(q)`.
pub fn horizontal_lift<T: Scalar>(q: &[T]) -> Mat<T> {
    let d = q.len();
    let n = d / 4;
    let r2 = rho_sq(q);
    let rho = r2.sqrt();
    let (inv, inv3) = (rho.recip(), (rho * r2).recip());
    let qs: Vec<Quat<T>> = (0..n).map(|l| quat_at(q, l)).collect();
    let mut h = Mat::zeros(d + 4, d);
    for j in 0..d {
        let (l, m) = (j / 4, j % 4);
        h[(4 + j, j)] = inv;
        // (1, q)⟨q, e_j⟩/ρ³
        let s = qs[l].conj() * basis_quat(m);
        for c in 0..4 {
            h[(c, j)] -= s.to_array()[c] * inv3;
        }
        for (b, &w) in qs.iter().enumerate() {
            let v = (w * s).to_array();
            for c in 0..4 {
                h[(4 * (b + 1) + c, j)] -= v[c] * inv3;
            }
        }
    }
    h
}

/// Block `(l, m)` is `δ_{lm}/ρ² − L(q_l q̄_m)/ρ⁴`.
#[derive(Clone, Copy, Debug)]
pub struct HpnMetric {
    pub n: usize,
}

impl Field for HpnMetric {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let d = q.len();
        let r2 = rho_sq(q);
        let (a, b) = (r2.recip(), (r2 * r2).recip());
        let mut g = Mat::zeros(d, d);
        for l in 0..self.n {
            for m in 0..self.n {
                let blk = (quat_at(q, l) * quat_at(q, m).conj()).left_matrix();
                for i in 0..4 {
                    for j in 0..4 {
                        let diag = if l == m && i == j { a } else { T::zero() };
                        g[(4 * l + i, 4 * m + j)] = diag - blk[(i, j)] * b;
                    }
                }
            }
        }
        g.data
    }
}

/// `g⁻¹ = ρ²(I + MᵀM)`, block `(l, m)` equal to `ρ²(δ_{lm} + L(q_l q̄_m))`.
pub fn inverse_metric<T: Scalar>(q: &[T]) -> Mat<T> {
    let d = q.len();
    let r2 = rho_sq(q);
    let mut g = Mat::zeros(d, d);
    for l in 0..d / 4 {
        for m in 0..d / 4 {
            let blk = (quat_at(q, l) * quat_at(q, m).conj()).left_matrix();
            for i in 0..4 {
                for j in 0..4 {
                    let diag = if l == m && i == j { T::one() } else { T::zero() };
                    g[(4 * l + i, 4 * m + j)] = (diag + blk[(i, j)]) * r2;
                }
            }
        }
    }
    g
}

/// `∇_X Y = ∂_X Y − (X⟨q, Y⟩ + Y⟨q, X⟩)/ρ²` with `⟨q, Y⟩ = Σ q̄_l Y_l`.
#[derive(Clone, Copy, Debug)]
pub struct HpnLeviCivita {
    pub n: usize,
}

impl Connection for HpnLeviCivita {
    fn dim(&self) -> usize {
        4 * self.n
    }

    fn christoffel<T: Scalar>(&self, q: &[T]) -> Christoffel<T> {
        let d = self.dim();
        let minus_inv = -rho_sq(q).recip();
        // s[j] = ⟨q, e_j⟩ = q̄_l e_m
        let s: Vec<Quat<T>> = (0..d).map(|j| quat_at(q, j / 4).conj() * basis_quat(j % 4)).collect();
        let units: [Quat<T>; 4] = std::array::from_fn(basis_quat);
        let mut out = Christoffel::zeros(d);
        let idx = |k: usize, i: usize, j: usize| (k * d + i) * d + j;
        for i in 0..d {
            for j in i..d {
                let a = (units[i % 4] * s[j]).to_array();
                let b = (units[j % 4] * s[i]).to_array();
                for c in 0..4 {
                    let (ka, kb) = (4 * (i / 4) + c, 4 * (j / 4) + c);
                    out.data[idx(ka, i, j)] += a[c] * minus_inv;
                    out.data[idx(kb, i, j)] += b[c] * minus_inv;
                    if i != j {
                        out.data[idx(ka, j, i)] += a[c] * minus_inv;
                        out.data[idx(kb, j, i)] += b[c] * minus_inv;
                    }
                }
            }
        }
        out
    }
}

/// The admissible frame `I_α X = dπ(hor(X)·ē_α)`.
///
/// Right multiplication preserves the horizontal space, and pushing
/// `hor(X)·ē_α` back down gives `X·ē_α`, so the frame is the constant one of
/// ℍⁿ in every chart. [`submersion_frame`] computes it the long way.
#[derive(Clone, Copy, Debug)]
pub struct HpnFrame {
    pub n: usize,
}

impl QStructure for HpnFrame {
    fn dim(&self) -> usize {
        4 * self.n
    }

    fn frame<T: Scalar>(&self, _q: &[T]) -> Frame<T> {
        flat_frame(self.n).map(|m| m.lift())
    }
}

/// `I_α = g⁻¹ Hᵀ R(ē_α) H`, with `R(ē_α)` right multiplication on ℍ^{n+1}.
pub fn submersion_frame<T: Scalar>(q: &[T]) -> Frame<T> {
    let h = horizontal_lift(q);
    let ht = h.transpose();
    let ginv = inverse_metric(q);
    let blocks = h.rows / 4;
    [Q64::I, Q64::J, Q64::K].map(|u| {
        let r = right_mult_block(u.conj().lift::<T>(), blocks);
        &ginv * &(&ht * &(&r * &h))
    })
}

/// Circle action `e^{iθ}·[z] = [(e^{ip_bθ} z_b)_b]` by left multiplication.
///
/// Equal weights give a nontrivial action, since left multiplication by
/// `e^{iθ}` is not a right scalar. Only all-zero weights act trivially.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CircleAction {
    pub weights: Vec<i64>,
}

impl CircleAction {
    pub fn new(weights: Vec<i64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(GeomError::InvalidDimension { dim: weights.len(), reason: "an action on ℍPⁿ needs n+1 ≥ 2 weights" });
        }
        Ok(CircleAction { weights })
    }

    /// Weights `(1, …, 1)`.
    pub fn uniform(n: usize) -> Self {
        CircleAction { weights: vec![1; n + 1] }
    }

    pub fn n(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn is_trivial(&self) -> bool {
        self.weights.iter().all(|&w| w == 0)
    }

    /// Fundamental field in chart `index`.
    pub fn field(&self, index: usize) -> ActionField {
        let others = self.weights.iter().enumerate().filter(|(b, _)| *b != index).map(|(_, &w)| w as f64).collect();
        ActionField { reference: self.weights[index] as f64, weights: others }
    }

    pub fn act(&self, theta: f64, z: &HVec<f64>) -> HVec<f64> {
        HVec::new(z.entries.iter().zip(&self.weights).map(|(&zb, &p)| Q64::exp_imag(Q64::I, p as f64 * theta) * zb).collect())
    }

    pub fn act_in_chart(&self, theta: f64, q: &[f64], index: usize) -> Result<Vec<f64>> {
        chart_coords(&self.act(theta, &section(q, index)), index)
    }
}

/// `X_l = p_l i q_l − p_a q_l i` in a chart with reference weight `p_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionField {
    pub reference: f64,
    pub weights: Vec<f64>,
}

impl Field for ActionField {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let i = Q64::I.lift::<T>();
        self.weights
            .iter()
            .enumerate()
            .flat_map(|(l, &p)| {
                let ql = quat_at(q, l);
                ((i * ql).scale(T::cst(p)) - (ql * i).scale(T::cst(self.reference))).to_array()
            })
            .collect()
    }
}

/// `Y ↦ ∇_Y X` at `q`.
pub fn nabla_x<C: Connection>(conn: &C, field: &ActionField, q: &[f64]) -> Mat<f64> {
    nabla_of_vector(conn, field, q, DerivEngine::Dual)
}

/// Splitting of `∇X` into its Q-part and centralizer part.
pub fn fq_fz<C: Connection, Q: QStructure>(conn: &C, qs: &Q, field: &ActionField, q: &[f64], tol: f64) -> Projection {
    q_project(&nabla_x(conn, field, q), &qs.frame(q), tol)
}

/// Residuals of the two expressions for `∇f_Q`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HessianCheck {
    /// `max_Y ‖∇_Y f_Q − Q-part of ∇_Y(∇X)‖`.
    pub hessian: f64,
    /// `max_Y ‖∇_Y f_Q − Q-part of R_{Y,X}‖`.
    pub curvature: f64,
    /// `max_Y ‖∇_Y f_Q‖`.
    pub size: f64,
}

impl HessianCheck {
    pub fn residual(&self) -> f64 {
        self.hessian.max(self.curvature)
    }
}

pub fn hessian_identity_check<C, Q>(conn: &C, qs: &Q, field: &ActionField, q: &[f64]) -> HessianCheck
where
    C: Connection + Clone,
    Q: QStructure + Clone,
{
    let d = q.len();
    let engine = DerivEngine::Dual;
    let nab = NablaField { conn: conn.clone(), field: field.clone(), engine };
    let fq = FqField { nabla: nab.clone(), q: qs.clone() };
    let f = qs.frame(q);
    let r = riemann_at(conn, q, engine);
    let xv = field.eval(q);
    let mut out = HessianCheck { hessian: 0.0, curvature: 0.0, size: 0.0 };
    for j in 0..d {
        let y = unit::<f64>(d, j);
        let lhs = nabla_endo_at(conn, &fq, q, &y, engine);
        let hess = q_part(&nabla_endo_at(conn, &nab, q, &y, engine), &f);
        let curv = q_part(&r.endo(&y, &xv), &f);
        out.hessian = out.hessian.max((&lhs - &hess).norm());
        out.curvature = out.curvature.max((&lhs - &curv).norm());
        out.size = out.size.max(lhs.norm());
    }
    out
}

/// `‖L_X g‖` at `q`.
pub fn killing_residual<M: Field>(metric: &M, field: &ActionField, q: &[f64]) -> f64 {
    let d = q.len();
    let engine = DerivEngine::Dual;
    let g = as_mat(metric.eval(q), d);
    let dg = as_mat(engine.deriv(metric, q, &field.eval(q)), d);
    let dx = Mat::from_columns(&engine.partials(field, q));
    (&(&dg + &(&dx.transpose() * &g)) + &(&g * &dx)).max_abs()
}

/// `max_α ‖[∇X, I_α] mod Q‖`: zero iff `∇X` normalizes Q.
pub fn normalizer_residual<C: Connection, Q: QStructure>(conn: &C, qs: &Q, field: &ActionField, q: &[f64]) -> f64 {
    let nx = nabla_x(conn, field, q);
    let f = qs.frame(q);
    f.iter()
        .map(|i| {
            let c = nx.commutator(i);
            (&c - &q_part(&c, &f)).norm()
        })
        .fold(0.0, f64::max)
}

/// Orthonormal basis of `Ker ∇X`, the tangent space of the fixed set.
pub fn fixed_tangent_space<C: Connection>(conn: &C, field: &ActionField, q: &[f64]) -> Mat<f64> {
    linalg::null_space(&nabla_x(conn, field, q), 1e-8)
}

/// `max ‖∇_X Y − proj_{TF}(∇_X Y)‖` over basis vectors of a linear fixed set.
pub fn geodesy_defect<C: Connection>(conn: &C, tf: &Mat<f64>, q: &[f64]) -> f64 {
    let g = conn.christoffel(q);
    let mut worst: f64 = 0.0;
    for a in 0..tf.cols {
        for b in 0..tf.cols {
            let v = g.apply(&tf.column(a), &tf.column(b));
            let coeff = tf.transpose().mul_vec(&v);
            let along = tf.mul_vec(&coeff);
            worst = worst.max(linalg::norm(&v.iter().zip(&along).map(|(p, r)| p - r).collect::<Vec<_>>()));
        }
    }
    worst
}

/// `‖IY − proj_{TF}(IY)‖` for `I = f_Q/‖f_Q‖` and `Y` in a basis of `TF`.
pub fn complex_invariance(fq: &Mat<f64>, tf: &Mat<f64>) -> f64 {
    let n = fq.rows / 4;
    let i = fq.scale_f(1.0 / q_inner(fq, fq, n).sqrt());
    let it = &i * tf;
    let back = &(tf * &tf.transpose()) * &it;
    (&it - &back).max_abs()
}

/// Smallest principal angle between `TF` and `J(TF)`.
pub fn transversality_angle(j: &Mat<f64>, tf: &Mat<f64>) -> f64 {
    let jt = linalg::column_space(&(j * tf), 1e-10);
    linalg::principal_angles(tf, &jt).first().copied().unwrap_or(std::f64::consts::FRAC_PI_2)
}

/// The Lie-derivative identity `L_X A = ∇_X A − [∇X, A]` for a
/// torsion-free connection.
pub fn lie_identity_residual<C: Connection, A: Field>(conn: &C, field: &ActionField, a: &A, q: &[f64]) -> f64 {
    let engine = DerivEngine::Dual;
    let lie = lie_endo_at(field, a, q, engine);
    let cov = nabla_endo_at(conn, a, q, &field.eval(q), engine);
    let am = as_mat(a.eval(q), q.len());
    let rhs = &cov - &nabla_x(conn, field, q).commutator(&am);
    (&lie - &rhs).max_abs()
}

/// Kind of a fixed-point component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedKind {
    Quaternionic,
    TransversalComplex,
    Isolated,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedComponent {
    pub kind: FixedKind,
    pub dim: usize,
    pub witnesses: Vec<ChartPoint>,
    /// Mean `‖f_Q‖` over witnesses.
    pub f_q_norm: f64,
    /// Largest deviation of `‖f_Q‖` from the mean.
    pub f_q_spread: f64,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub seeds: usize,
    pub seed: u64,
    pub cluster_radius: f64,
    pub fq_tol: f64,
    pub max_iter: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seeds: 200, seed: 42, cluster_radius: 1e-3, fq_tol: 1e-5, max_iter: 60 }
    }
}

#[derive(Clone, Debug)]
pub struct FixedSearch {
    pub components: Vec<FixedComponent>,
    /// Seeds whose refinement did not converge.
    pub failures: Vec<GeomError>,
}

fn is_fixed(field: &ActionField, q: &[f64]) -> bool {
    linalg::norm(&field.eval(q)) <= 1e-9 * (1.0 + linalg::norm(q))
}

/// Levenberg-Marquardt on `|X(q)|²` from a seed.
fn polish(field: &ActionField, mut q: Vec<f64>, max_iter: usize, seed: u64) -> Result<Vec<f64>> {
    let d = q.len();
    let mut lambda = 1e-6;
    for _ in 0..max_iter {
        let r = field.eval(&q);
        let res = linalg::norm(&r);
        if res <= 1e-13 * (1.0 + linalg::norm(&q)) {
            return Ok(q);
        }
        let j = Mat::from_columns(&DerivEngine::Dual.partials(field, &q)).to_na();
        let jt = j.transpose();
        let lhs = &jt * &j + nalgebra::DMatrix::identity(d, d) * lambda;
        let rhs = -(&jt * nalgebra::DVector::from_vec(r));
        let step = lhs.lu().solve(&rhs).ok_or(GeomError::ConvergenceFailure { seed })?;
        let trial: Vec<f64> = q.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        if linalg::norm(&field.eval(&trial)) < res {
            q = trial;
            lambda = (lambda * 0.1).max(1e-12);
        } else {
            lambda *= 10.0;
        }
    }
    if is_fixed(field, &q) {
        Ok(q)
    } else {
        Err(GeomError::ConvergenceFailure { seed })
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        let p = self.0[a];
        if p == a {
            return a;
        }
        let r = self.find(p);
        self.0[a] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Fixed-point components of a circle action, found by polishing seeded
/// samples in every chart, merging nearby points and joining points whose
/// chart segment stays fixed.
pub fn find_fixed_components(space: &HPn, action: &CircleAction, opts: &SearchOptions) -> Result<FixedSearch> {
    if action.n() != space.n {
        return Err(GeomError::InvalidDimension { dim: action.weights.len(), reason: "weights must have n+1 entries" });
    }
    let d = space.dim();
    let charts = space.n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds: Vec<(usize, Vec<f64>)> =
        (0..opts.seeds).map(|s| (s % charts, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())).collect();

    let mut points: Vec<HVec<f64>> = Vec::new();
    let mut failures = Vec::new();
    for (s, (c, q0)) in seeds.into_iter().enumerate() {
        match polish(&action.field(c), q0, opts.max_iter, s as u64) {
            Ok(q) => {
                let z = section(&q, c);
                if points.iter().all(|p| line_distance(p, &z) > opts.cluster_radius) {
                    points.push(z);
                }
            }
            Err(e) => failures.push(e),
        }
    }

    let fields: Vec<ActionField> = (0..charts).map(|c| action.field(c)).collect();
    let coords: Vec<Vec<Option<Vec<f64>>>> = points
        .iter()
        .map(|z| (0..charts).map(|c| if z.entries[c].norm_sq() >= 0.05 / charts as f64 { chart_coords(z, c).ok() } else { None }).collect())
        .collect();
    let mut uf = UnionFind((0..points.len()).collect());
    for a in 0..points.len() {
        for b in (a + 1)..points.len() {
            let joined = (0..charts).any(|c| match (&coords[a][c], &coords[b][c]) {
                (Some(p), Some(r)) => (1..8).all(|k| {
                    let t = k as f64 / 8.0;
                    let m: Vec<f64> = p.iter().zip(r).map(|(x, y)| x + t * (y - x)).collect();
                    is_fixed(&fields[c], &m)
                }),
                _ => false,
            });
            if joined {
                uf.union(a, b);
            }
        }
    }

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for a in 0..points.len() {
        let r = uf.find(a);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, members)) => members.push(a),
            None => groups.push((r, vec![a])),
        }
    }

    let lc = space.levi_civita();
    let qf = space.q_frame();
    let components = groups
        .into_iter()
        .map(|(_, members)| {
            let witnesses: Vec<ChartPoint> = members.iter().map(|&a| ChartPoint::from_line(&points[a])).collect();
            let norms: Vec<f64> = witnesses
                .iter()
                .map(|w| {
                    let f = fq_fz(&lc, &qf, &fields[w.chart], &w.q, 1e-6).q_part;
                    q_inner(&f, &f, space.n).sqrt()
                })
                .collect();
            let mean = norms.iter().sum::<f64>() / norms.len() as f64;
            let spread = norms.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            let w0 = &witnesses[0];
            let dim = d - linalg::rank(&nabla_x(&lc, &fields[w0.chart], &w0.q), 1e-8);
            let kind = if dim == 0 {
                FixedKind::Isolated
            } else if mean < opts.fq_tol {
                FixedKind::Quaternionic
            } else {
                FixedKind::TransversalComplex
            };
            FixedComponent { kind, dim, witnesses, f_q_norm: mean, f_q_spread: spread }
        })
        .collect();
    Ok(FixedSearch { components, failures })
}

/// Residuals of the coincidence of `∇^μ` and `∇` along a fixed set.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Coincidence {
    /// `max |S^α_X Y|` over orthonormal `X, Y ∈ TF`.
    pub difference: f64,
    /// `max |α(X)|` over `X ∈ TF`.
    pub alpha_on_f: f64,
}

/// Coincidence of the μ-connection with the gauge connection on `TF`.
pub fn connection_coincidence(mu: &HpnMuConnection, tf: &Mat<f64>, q: &[f64]) -> Result<Coincidence> {
    mu.guard(q)?;
    let alpha = mu.alpha(q);
    let f = mu.q.frame(q);
    let mut out = Coincidence { difference: 0.0, alpha_on_f: 0.0 };
    for a in 0..tf.cols {
        let x = tf.column(a);
        out.alpha_on_f = out.alpha_on_f.max(linalg::dot(&alpha, &x).abs());
        for b in 0..tf.cols {
            out.difference = out.difference.max(linalg::norm(&s_xi(&alpha, &f, &x, &tf.column(b))));
        }
    }
    Ok(out)
}

/// `n·Ric^g` against `(n+2)·Ric^μ` at a point of the fixed set.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RicciRatio {
    /// Relative residual on `TF × TF`.
    pub on_tf: f64,
    /// Relative residual on the whole tangent space.
    pub full: f64,
}

pub fn ricci_ratio(space: &HPn, mu: &HpnMuConnection, tf: &Mat<f64>, q: &[f64]) -> Result<RicciRatio> {
    mu.guard(q)?;
    let n = space.n as f64;
    let rg = riemann_at(&space.levi_civita(), q, DerivEngine::Dual).ricci().scale_f(n);
    let rm = riemann_at(mu, q, DerivEngine::Dual).ricci().scale_f(n + 2.0);
    let diff = &rg - &rm;
    let restrict = |m: &Mat<f64>| &(&tf.transpose() * m) * tf;
    Ok(RicciRatio { on_tf: restrict(&diff).max_abs() / restrict(&rg).max_abs(), full: diff.max_abs() / rg.max_abs() })
}

/// Sample of `Sp(1)·Sp(n)` fixing the chart origin: `q ↦ A q a⁻¹`.
#[derive(Clone, Debug)]
pub struct OriginIsometry {
    pub right: Q64,
    /// Applied in order: a unit-quaternion phase on one coordinate, then a
    /// real rotation mixing two coordinates.
    pub steps: Vec<(usize, Q64, usize, usize, f64)>,
}

impl OriginIsometry {
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let unit = |rng: &mut dyn rand::RngCore| {
            let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let q = Quat::new(v[0], v[1], v[2], v[3]);
            q.scale(1.0 / q.norm())
        };
        let right = unit(rng);
        let steps = (0..3 * n)
            .map(|_| {
                let l = rng.gen_range(0..n);
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                (l, unit(rng), a, b, rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        OriginIsometry { right, steps }
    }

    /// The map is linear in the chart, so it also acts on tangent vectors.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let n = q.len() / 4;
        let mut v: Vec<Q64> = (0..n).map(|l| quat_at(q, l)).collect();
        for &(l, u, a, b, t) in &self.steps {
            v[l] = u * v[l];
            if a != b {
                let (x, y) = (v[a], v[b]);
                v[a] = x.scale(t.cos()) - y.scale(t.sin());
                v[b] = x.scale(t.sin()) + y.scale(t.cos());
            }
        }
        let inv = self.right.conj();
        v.into_iter().flat_map(|x| (x * inv).to_array()).collect()
    }
}

/// `max |g(φq)(φX, φY) − g(q)(X, Y)|` over basis vectors.
pub fn isometry_residual(metric: &HpnMetric, phi: &OriginIsometry, q: &[f64]) -> f64 {
    let d = q.len();
    let g0 = as_mat(metric.eval(q), d);
    let g1 = as_mat(metric.eval(&phi.apply(q)), d);
    let cols: Vec<Vec<f64>> = (0..d).map(|j| phi.apply(&unit::<f64>(d, j))).collect();
    let p = Mat::from_columns(&cols);
    (&(&(&p.transpose() * &g1) * &p) - &g0).max_abs()
}

/// Relative defect of `Ric = λg` and the fitted `λ`.
pub fn einstein_fit(ric: &Mat<f64>, g: &Mat<f64>) -> (f64, f64) {
    let lambda = ric.trace_of_product(&g.transpose()) / g.trace_of_product(&g.transpose());
    let defect = (ric - &g.scale_f(lambda)).max_abs() / (lambda.abs() * g.max_abs());
    (lambda, defect)
}

/// Largest frame defect, the quaternionic relations together with
/// Q-orthonormality, at `q`.
pub fn frame_residual(space: &HPn, q: &[f64]) -> f64 {
    frame_defect(&space.q_frame().frame(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternionic::{check_twistor, q_preservation_residual, QCurvature};
    use crate::tensor::{metricity_residual, torsion};
    use proptest::prelude::{prop_assert, proptest};

    fn point(d: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn section_is_unit_and_origin_maps_to_first_vector() {
        let z = section(&[0.0; 4], 0);
        assert_eq!(z.entries[0], Q64::one());
        let q = point(8, 1);
        assert!((section(&q, 1).norm_sq() - 1.0).abs() < 1e-14);
        let back = chart_coords(&section(&q, 2), 2).unwrap();
        assert!(q.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!(matches!(chart_coords(&section(&[0.0; 4], 0), 1), Err(GeomError::ChartEscape)));
    }

    #[test]
    fn metric_is_pullback_of_horizontal_projection() {
        for seed in 0..5 {
            let q = point(8, seed);
            let h = horizontal_lift(&q);
            let g = as_mat(HpnMetric { n: 2 }.eval(&q), 8);
            assert!((&(&h.transpose() * &h) - &g).max_abs() < 1e-14);
            assert!((&(&g * &inverse_metric(&q)) - &Mat::identity(8)).max_abs() < 1e-12);
            // horizontal: orthogonal to z·ℍ
            let z = section(&q, 0);
            for j in 0..8 {
                let col = HVec::from_real(&h.column(j));
                assert!(z.hermitian(&col).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn metric_examples() {
        let g0 = as_mat(HpnMetric { n: 1 }.eval(&[0.0; 4]), 4);
        assert_eq!(g0, Mat::identity(4));
        // n = 1 is conformally flat with factor (1 + |q|²)⁻²
        let q = [0.3, -0.7, 0.2, 1.1];
        let g = as_mat(HpnMetric { n: 1 }.eval(&q), 4);
        let c = 1.0 / rho_sq(&q).powi(2);
        assert!((&g - &Mat::<f64>::identity(4).scale_f(c)).max_abs() < 1e-15);
    }

    #[test]
    fn closed_levi_civita_matches_metric_derivatives() {
        let space = HPn::new(2).unwrap();
        let q = point(8, 3);
        let a = space.levi_civita().christoffel(&q);
        let b = space.levi_civita_from_metric(DerivEngine::Dual).christoffel(&q);
        let fd = space.levi_civita_from_metric(DerivEngine::fd()).christoffel(&q);
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| (x - y).abs() < 1e-12));
        assert!(a.data.iter().zip(&fd.data).all(|(x, y)| (x - y).abs() < 1e-8));
        assert!(torsion(&space.levi_civita(), &q).data.iter().all(|v| *v == 0.0));
        assert!(metricity_residual(&space.levi_civita(), &space.metric(), &q, DerivEngine::Dual) < 1e-13);
        assert!(space.levi_civita().christoffel(&[0.0; 8]).data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn einstein_constant() {
        for n in [1, 2] {
            let space = HPn::new(n).unwrap();
            let q = point(4 * n, 7);
            let ric = riemann_at(&space.levi_civita(), &q, DerivEngine::Dual).ricci();
            let (lambda, defect) = einstein_fit(&ric, &as_mat(space.metric().eval(&q), 4 * n));
            assert!((lambda - 4.0 * (n as f64 + 2.0)).abs() < 1e-9, "{lambda}");
            assert!(defect < 1e-10);
        }
    }

    #[test]
    fn frame_is_admissible_hermitian_and_parallel_in_q() {
        let space = HPn::new(2).unwrap();
        for seed in 0..4 {
            let q = point(8, 10 + seed);
            let long = submersion_frame(&q);
            let short = space.q_frame().frame(&q);
            assert!((0..3).all(|a| (&long[a] - &short[a]).max_abs() < 1e-13));
            assert!(frame_residual(&space, &q) < 1e-12);
            let g = as_mat(space.metric().eval(&q), 8);
            for i in space.q_frame().frame(&q) {
                assert!((&(&(&i.transpose() * &g) * &i) - &g).max_abs() < 1e-12);
            }
            let r = q_preservation_residual(&space.levi_civita(), &space.q_frame(), &q, DerivEngine::Dual);
            assert!(r < 1e-12, "{r}");
        }
    }

    #[test]
    fn action_field_examples() {
        let a = CircleAction::uniform(1).field(0);
        assert!(a.eval(&[0.4, -1.3, 0.0, 0.0]).iter().all(|v| *v == 0.0));
        assert_eq!(a.eval(&[0.0, 0.0, 1.0, 0.0]), vec![0.0, 0.0, 0.0, 2.0]);
        let w = CircleAction::new(vec![1, 5, -2]).unwrap();
        assert!(w.field(1).eval(&[0.0; 8]).iter().all(|v| *v == 0.0));
        // agrees with differentiating the group action
        let q = point(8, 4);
        let h = 1e-6;
        let p = w.act_in_chart(h, &q, 0).unwrap();
        let m = w.act_in_chart(-h, &q, 0).unwrap();
        let x = w.field(0).eval(&q);
        assert!(p.iter().zip(&m).zip(&x).all(|((a, b), c)| ((a - b) / (2.0 * h) - c).abs() < 1e-7));
    }

    #[test]
    fn uniform_action_is_killing_and_normalizes_q() {
        let space = HPn::new(2).unwrap();
        let f = CircleAction::uniform(2).field(0);
        let q = point(8, 5);
        assert!(killing_residual(&space.metric(), &f, &q) < 1e-13);
        assert!(normalizer_residual(&space.levi_civita(), &space.q_frame(), &f, &q) < 1e-12);
    }

    #[test]
    fn fixed_complex_line_structure() {
        let space = HPn::new(1).unwrap();
        let f = CircleAction::uniform(1).field(0);
        let lc = space.levi_civita();
        let q = [0.7, -0.2, 0.0, 0.0];
        let nx = nabla_x(&lc, &f, &q);
        assert_eq!(linalg::rank(&nx, 1e-8), 2);
        let tf = fixed_tangent_space(&lc, &f, &q);
        // kernel is the complex directions
        assert!(tf.column(0)[2].abs() < 1e-12 && tf.column(1)[3].abs() < 1e-12);
        let fq = fq_fz(&lc, &space.q_frame(), &f, &q, 1e-8);
        assert!(!fq.not_in_normalizer);
        assert!(complex_invariance(&fq.q_part, &tf) < 1e-12);
        let j = &space.q_frame().frame(&q)[1];
        assert!(transversality_angle(j, &tf) > 0.1);
        assert!(geodesy_defect(&lc, &tf, &q) < 1e-12);
    }

    #[test]
    fn hessian_identity() {
        let space = HPn::new(1).unwrap();
        let f = CircleAction::uniform(1).field(0);
        let (lc, qf) = (space.levi_civita(), space.q_frame());
        let at_fixed = hessian_identity_check(&lc, &qf, &f, &[0.5, 0.3, 0.0, 0.0]);
        assert!(at_fixed.size < 1e-12 && at_fixed.residual() < 1e-12);
        let generic = hessian_identity_check(&lc, &qf, &f, &[0.5, 0.3, -0.4, 0.1]);
        assert!(generic.size > 1e-2 && generic.residual() < 1e-12, "{generic:?}");
        let none = ActionField { reference: 0.0, weights: vec![0.0] };
        assert_eq!(hessian_identity_check(&lc, &qf, &none, &[0.5, 0.3, -0.4, 0.1]).size, 0.0);
    }

    #[test]
    fn fixed_components_of_weighted_actions() {
        let opts = SearchOptions { seeds: 40, ..Default::default() };
        let dims = |n: usize, w: Vec<i64>| {
            let s = find_fixed_components(&HPn::new(n).unwrap(), &CircleAction::new(w).unwrap(), &opts).unwrap();
            let mut v: Vec<(usize, FixedKind)> = s.components.iter().map(|c| (c.dim, c.kind)).collect();
            v.sort_by_key(|x| x.0);
            v
        };
        assert_eq!(dims(1, vec![1, 1]), vec![(2, FixedKind::TransversalComplex)]);
        assert_eq!(dims(1, vec![1, 2]), vec![(0, FixedKind::Isolated), (0, FixedKind::Isolated)]);
        assert_eq!(dims(2, vec![1, 1, 2]), vec![(0, FixedKind::Isolated), (2, FixedKind::TransversalComplex)]);
        assert_eq!(dims(2, vec![0, 0, 1]), vec![(0, FixedKind::Isolated), (4, FixedKind::Quaternionic)]);
    }

    #[test]
    fn twistor_equation_and_coincidence() {
        let space = HPn::new(1).unwrap();
        let action = CircleAction::uniform(1);
        let t = space.twistor(&action, 0);
        let q = [0.3, 0.2, -0.5, 0.4];
        let r = check_twistor(&t, &space.q_frame(), &q, DerivEngine::Dual);
        assert!(r.residual() < 1e-12, "{r:?}");
        let mu = space.mu_connection(&action, 0);
        let on_f = [0.6, -0.3, 0.0, 0.0];
        let tf = fixed_tangent_space(&space.levi_civita(), &action.field(0), &on_f);
        let c = connection_coincidence(&mu, &tf, &on_f).unwrap();
        assert!(c.difference < 1e-12 && c.alpha_on_f < 1e-12);
        let off = connection_coincidence(&mu, &tf, &q).unwrap();
        assert!(off.difference > 1e-3);
        let ratio = ricci_ratio(&space, &mu, &tf, &on_f).unwrap();
        assert!(ratio.on_tf < 1e-3, "{ratio:?}");
    }

    #[test]
    fn weyl_vanishes_and_is_projectively_invariant() {
        for n in [1, 2] {
            let space = HPn::new(n).unwrap();
            let chart = space.chart(0).unwrap();
            let q = point(4 * n, 30);
            let base = QCurvature::at(&space.levi_civita(), &space.q_frame(), &q, DerivEngine::Dual, &chart).unwrap();
            assert!(base.weyl_norm() < 1e-10);
            let xi = crate::tensor::ConstField((0..4 * n).map(|k| 0.1 * k as f64 - 0.2).collect());
            let shifted = crate::quaternionic::modify_connection(space.levi_civita(), xi, space.q_frame());
            let other = QCurvature::at(&shifted, &space.q_frame(), &q, DerivEngine::Dual, &chart).unwrap();
            assert!(base.weyl_distance(&other) < 1e-10);
            assert!(
                (&base.riemann.endo(&unit(4 * n, 0), &unit(4 * n, 1)) - &other.riemann.endo(&unit(4 * n, 0), &unit(4 * n, 1))).norm()
                    > 1e-3
            );
        }
    }

    #[test]
    fn twistor_identities_and_mu_structure() {
        for n in [1, 2] {
            let space = HPn::new(n).unwrap();
            let action = CircleAction::uniform(n);
            let q = point(4 * n, 21);
            let ids = crate::quaternionic::twistor_identities(&space.twistor(&action, 0), &space.q_frame(), &q, DerivEngine::Dual).unwrap();
            assert!(ids.norm_gradient < 1e-8 && ids.eta < 1e-8, "{ids:?}");
            let st = crate::quaternionic::mu_structure(&space.mu_connection(&action, 0), &q, &space.chart(0).unwrap()).unwrap();
            assert!(st.nabla_i < 1e-8 && st.ricci_skew < 1e-8 && st.anti_invariance < 1e-8 && st.pi_h < 1e-8, "{st:?}");
        }
    }

    proptest! {
        #[test]
        fn origin_isometries_preserve_the_metric(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phi = OriginIsometry::random(2, &mut rng);
            let q = point(8, seed + 1);
            let r = isometry_residual(&HPn::new(2).unwrap().metric(), &phi, &q);
            prop_assert!(r < 1e-12);
        }

        #[test]
        fn chart_changes_round_trip(seed in 0u64..1000) {
            let q = point(8, seed);
            let p = change_chart(&q, 0, 2).unwrap();
            let back = change_chart(&p, 2, 0).unwrap();
            prop_assert!(q.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-11));
        }
    }
}
