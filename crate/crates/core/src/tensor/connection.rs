use super::{as_mat, finite, unit, Chart, DerivEngine, Field};
use crate::error::{GeomError, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Christoffel symbols `Γ^k_{ij}`, stored at `k·n² + i·n + j`.
///
/// The first lower index is the differentiating direction:
/// `∇_X Y = ∂_X Y + Γ^k_{ij} X^i Y^j e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Christoffel<T> {
    pub fn zeros(n: usize) -> Self {
        Christoffel { n, data: vec![T::zero(); n * n * n] }
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, v: T) {
        let n = self.n;
        self.data[(k * n + i) * n + j] = v;
    }

    /// `Γ_X`, the endomorphism `Y ↦ Γ(X, Y)`.
    pub fn along(&self, x: &[T]) -> Mat<T> {
        let n = self.n;
        Mat::from_fn(n, n, |k, j| (0..n).map(|i| self.get(k, i, j) * x[i]).sum())
    }

    /// `Γ_{e_i}`.
    pub fn basis(&self, i: usize) -> Mat<T> {
        let n = self.n;
        Mat::from_fn(n, n, |k, j| self.get(k, i, j))
    }

    /// `Γ(X, Y)`.
    pub fn apply(&self, x: &[T], y: &[T]) -> Vec<T> {
        self.along(x).mul_vec(y)
    }

    pub fn add(&self, o: &Self) -> Self {
        Christoffel { n: self.n, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }
}

/// Affine connection on a chart.
pub trait Connection: Sync {
    fn dim(&self) -> usize;
    fn christoffel<T: Scalar>(&self, x: &[T]) -> Christoffel<T>;
}

impl<C: Connection> Connection for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn christoffel<T: Scalar>(&self, x: &[T]) -> Christoffel<T> {
        (**self).christoffel(x)
    }
}

/// The coordinate connection, `Γ ≡ 0`.
#[derive(Clone, Copy, Debug)]
pub struct Flat(pub usize);

impl Connection for Flat {
    fn dim(&self) -> usize {
        self.0
    }
    fn christoffel<T: Scalar>(&self, _x: &[T]) -> Christoffel<T> {
        Christoffel::zeros(self.0)
    }
}

/// Connection whose symbols come from a field with `n³` components.
#[derive(Clone, Debug)]
pub struct FromField<F> {
    pub n: usize,
    pub field: F,
}

impl<F: Field> Connection for FromField<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn christoffel<T: Scalar>(&self, x: &[T]) -> Christoffel<T> {
        Christoffel { n: self.n, data: self.field.eval(x) }
    }
}

/// The symbols of a connection viewed as a field, so they can be differentiated.
pub struct SymbolField<'a, C>(pub &'a C);

impl<C: Connection> Field for SymbolField<'_, C> {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.0.christoffel(x).data
    }
}

/// Levi-Civita connection of a metric field (`n²` components, symmetric).
#[derive(Clone, Debug)]
pub struct LeviCivita<M> {
    pub metric: M,
    pub n: usize,
    pub engine: DerivEngine,
}

impl<M: Field> LeviCivita<M> {
    pub fn new(metric: M, n: usize, engine: DerivEngine) -> Self {
        LeviCivita { metric, n, engine }
    }
}

impl<M: Field> Connection for LeviCivita<M> {
    fn dim(&self) -> usize {
        self.n
    }

    fn christoffel<T: Scalar>(&self, x: &[T]) -> Christoffel<T> {
        let n = self.n;
        let g = as_mat(self.metric.eval(x), n);
        let dg: Vec<Mat<T>> = self.engine.partials(&self.metric, x).into_iter().map(|d| as_mat(d, n)).collect();
        let gi = g.inverse().unwrap_or_else(|_| Mat::from_fn(n, n, |_, _| T::cst(f64::NAN)));
        // first kind, symmetric in (i, j) by construction
        let mut low = vec![T::zero(); n * n * n];
        for i in 0..n {
            for j in i..n {
                for l in 0..n {
                    let v = (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]) * 0.5;
                    low[(i * n + j) * n + l] = v;
                    low[(j * n + i) * n + l] = v;
                }
            }
        }
        let mut out = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v: T = (0..n).map(|l| gi[(k, l)] * low[(i * n + j) * n + l]).sum();
                    out.set(k, i, j, v);
                    out.set(k, j, i, v);
                }
            }
        }
        out
    }
}

/// Riemann tensor at a point: `data[((k·n + l)·n + i)·n + j] = (R_{e_i,e_j} e_l)^k`.
#[derive(Clone, Debug)]
pub struct Riemann<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Riemann<T> {
    pub fn get(&self, k: usize, l: usize, i: usize, j: usize) -> T {
        let n = self.n;
        self.data[((k * n + l) * n + i) * n + j]
    }

    /// `R_{X,Y}` as an endomorphism.
    pub fn endo(&self, x: &[T], y: &[T]) -> Mat<T> {
        let n = self.n;
        Mat::from_fn(n, n, |k, l| {
            let mut acc = T::zero();
            for i in 0..n {
                for j in 0..n {
                    acc += self.get(k, l, i, j) * x[i] * y[j];
                }
            }
            acc
        })
    }

    /// `R_{e_i, e_j}`.
    pub fn basis_endo(&self, i: usize, j: usize) -> Mat<T> {
        let n = self.n;
        Mat::from_fn(n, n, |k, l| self.get(k, l, i, j))
    }

    /// `Ric(Y, Z) = Tr(X ↦ R_{X,Y} Z)`.
    pub fn ricci(&self) -> Mat<T> {
        let n = self.n;
        Mat::from_fn(n, n, |j, l| (0..n).map(|k| self.get(k, l, k, j)).sum())
    }
}

/// Riemann tensor of any connection, generic over the scalar type.
pub fn riemann_at<C: Connection, T: Scalar>(c: &C, x: &[T], engine: DerivEngine) -> Riemann<T> {
    let n = c.dim();
    let g = c.christoffel(x);
    let dg: Vec<Christoffel<T>> = engine.partials(&SymbolField(c), x).into_iter().map(|data| Christoffel { n, data }).collect();
    let mut data = vec![T::zero(); n * n * n * n];
    for k in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut v = dg[i].get(k, j, l) - dg[j].get(k, i, l);
                    for m in 0..n {
                        v += g.get(k, i, m) * g.get(m, j, l) - g.get(k, j, m) * g.get(m, i, l);
                    }
                    data[((k * n + l) * n + i) * n + j] = v;
                    data[((k * n + l) * n + j) * n + i] = -v;
                }
            }
        }
    }
    Riemann { n, data }
}

/// `∇_X Y` for a vector field `Y`, generic over the scalar type.
pub fn nabla_vec_at<C: Connection, F: Field, T: Scalar>(c: &C, y: &F, x: &[T], dir: &[T], engine: DerivEngine) -> Vec<T> {
    let dy = engine.deriv(y, x, dir);
    let corr = c.christoffel(x).apply(dir, &y.eval(x));
    dy.into_iter().zip(corr).map(|(a, b)| a + b).collect()
}

/// `∇Y`, the endomorphism `Z ↦ ∇_Z Y`.
pub fn nabla_of_vector<C: Connection, F: Field, T: Scalar>(c: &C, y: &F, x: &[T], engine: DerivEngine) -> Mat<T> {
    let g = c.christoffel(x);
    let yv = y.eval(x);
    let cols: Vec<Vec<T>> = engine
        .partials(y, x)
        .into_iter()
        .enumerate()
        .map(|(j, d)| {
            let corr = g.basis(j).mul_vec(&yv);
            d.into_iter().zip(corr).map(|(a, b)| a + b).collect()
        })
        .collect();
    Mat::from_columns(&cols)
}

/// `∇_X A` for an endomorphism field `A`, generic over the scalar type.
pub fn nabla_endo_at<C: Connection, F: Field, T: Scalar>(c: &C, a: &F, x: &[T], dir: &[T], engine: DerivEngine) -> Mat<T> {
    let n = c.dim();
    let da = as_mat(engine.deriv(a, x, dir), n);
    let gx = c.christoffel(x).along(dir);
    &da + &gx.commutator(&as_mat(a.eval(x), n))
}

/// `L_X A` for a vector field `X` and endomorphism field `A`.
pub fn lie_endo_at<X: Field, A: Field, T: Scalar>(xf: &X, a: &A, x: &[T], engine: DerivEngine) -> Mat<T> {
    let n = x.len();
    let xv = xf.eval(x);
    let da = as_mat(engine.deriv(a, x, &xv), n);
    let dx = Mat::from_columns(&engine.partials(xf, x));
    let am = as_mat(a.eval(x), n);
    &(&da - &(&dx * &am)) + &(&am * &dx)
}

fn check_all_directions(engine: DerivEngine, chart: &Chart, x: &[f64]) -> Result<()> {
    for i in 0..x.len() {
        engine.check_stencil(chart, x, &unit::<f64>(x.len(), i))?;
    }
    Ok(())
}

fn finite_mat(m: Mat<f64>, context: &'static str) -> Result<Mat<f64>> {
    let Mat { rows, cols, data } = m;
    Ok(Mat::from_vec(rows, cols, finite(data, context)?))
}

/// `∇_X Y = ∂_X Y + Γ(X, Y)`.
pub fn covariant_deriv_vec<C: Connection, F: Field>(
    c: &C,
    y: &F,
    x: &[f64],
    dir: &[f64],
    engine: DerivEngine,
    chart: &Chart,
) -> Result<Vec<f64>> {
    engine.check_stencil(chart, x, dir)?;
    finite(nabla_vec_at(c, y, x, dir, engine), "covariant derivative")
}

/// `∇_X A = ∂_X A + [Γ_X, A]`.
pub fn covariant_deriv_endo<C: Connection, F: Field>(
    c: &C,
    a: &F,
    x: &[f64],
    dir: &[f64],
    engine: DerivEngine,
    chart: &Chart,
) -> Result<Mat<f64>> {
    engine.check_stencil(chart, x, dir)?;
    finite_mat(nabla_endo_at(c, a, x, dir, engine), "covariant derivative")
}

/// Torsion `T^k_{ij} = Γ^k_{ij} − Γ^k_{ji}`.
pub fn torsion<C: Connection>(c: &C, x: &[f64]) -> Christoffel<f64> {
    let g = c.christoffel(x);
    let n = g.n;
    let mut t = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                t.set(k, i, j, g.get(k, i, j) - g.get(k, j, i));
            }
        }
    }
    t
}

/// Full Riemann tensor at `x`.
pub fn riemann<C: Connection>(c: &C, x: &[f64], engine: DerivEngine, chart: &Chart) -> Result<Riemann<f64>> {
    check_all_directions(engine, chart, x)?;
    let r = riemann_at(c, x, engine);
    if r.data.iter().all(|v| v.is_finite()) {
        Ok(r)
    } else {
        Err(GeomError::NonFinite { context: "curvature" })
    }
}

/// `R_{X,Y} = ∂_X Γ_Y − ∂_Y Γ_X + [Γ_X, Γ_Y]`.
pub fn curvature<C: Connection>(c: &C, x: &[f64], xv: &[f64], yv: &[f64], engine: DerivEngine, chart: &Chart) -> Result<Mat<f64>> {
    engine.check_stencil(chart, x, xv)?;
    engine.check_stencil(chart, x, yv)?;
    let g = c.christoffel(x);
    let dgx = Christoffel { n: g.n, data: engine.deriv(&SymbolField(c), x, xv) };
    let dgy = Christoffel { n: g.n, data: engine.deriv(&SymbolField(c), x, yv) };
    let (gx, gy) = (g.along(xv), g.along(yv));
    let r = &(&dgx.along(yv) - &dgy.along(xv)) + &gx.commutator(&gy);
    finite_mat(r, "curvature")
}

/// Ricci tensor `Ric(Y, Z) = Tr(X ↦ R_{X,Y} Z)`.
pub fn ricci<C: Connection>(c: &C, x: &[f64], engine: DerivEngine, chart: &Chart) -> Result<Mat<f64>> {
    Ok(riemann(c, x, engine, chart)?.ricci())
}

/// `(L_X A)(Y) = [X, AY] − A[X, Y]`.
pub fn lie_derivative_endo<X: Field, A: Field>(xf: &X, a: &A, x: &[f64], engine: DerivEngine, chart: &Chart) -> Result<Mat<f64>> {
    check_all_directions(engine, chart, x)?;
    engine.check_stencil(chart, x, &xf.eval(x))?;
    finite_mat(lie_endo_at(xf, a, x, engine), "Lie derivative")
}

/// `max_{i,j,k} |(∇_k g)_{ij}|` for a metric field.
pub fn metricity_residual<C: Connection, M: Field>(c: &C, metric: &M, x: &[f64], engine: DerivEngine) -> f64 {
    let n = c.dim();
    let g = as_mat(metric.eval(x), n);
    let gam = c.christoffel(x);
    let mut worst: f64 = 0.0;
    for (k, dg) in engine.partials(metric, x).into_iter().enumerate() {
        let dg = as_mat(dg, n);
        let gk = gam.along(&unit::<f64>(n, k));
        let r = &(&dg - &(&gk.transpose() * &g)) - &(&g * &gk);
        worst = worst.max(r.max_abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    /// Unit round 4-sphere in stereographic coordinates, `4|dx|²/(1+|x|²)²`.
    struct RoundS4;
    impl Field for RoundS4 {
        fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
            let r2: T = x.iter().map(|&v| v * v).sum();
            let c = T::cst(4.0) / ((r2 + 1.0) * (r2 + 1.0));
            Mat::identity(4).scale(c).data
        }
    }

    struct Position;
    impl Field for Position {
        fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
            x.to_vec()
        }
    }

    fn chart() -> Chart {
        Chart::new(4, "R4").unwrap()
    }

    #[test]
    fn flat_examples() {
        let x = [0.3, -0.1, 0.2, 1.0];
        let d = [1.0, 2.0, 0.0, -1.0];
        for e in [DerivEngine::fd(), DerivEngine::Dual] {
            let c = covariant_deriv_vec(&Flat(4), &crate::tensor::ConstField(vec![1.0; 4]), &x, &d, e, &chart()).unwrap();
            assert!(norm(&c) < 1e-12);
            let p = covariant_deriv_vec(&Flat(4), &Position, &x, &d, e, &chart()).unwrap();
            assert!(p.iter().zip(&d).all(|(a, b)| (a - b).abs() < 1e-9));
            let id = crate::tensor::ConstField(Mat::<f64>::identity(4).data);
            let a = covariant_deriv_endo(&LeviCivita::new(RoundS4, 4, e), &id, &x, &d, e, &chart()).unwrap();
            assert!(a.max_abs() < 1e-12);
        }
    }

    #[test]
    fn torsion_examples() {
        let mut g = Christoffel::<f64>::zeros(4);
        g.set(0, 0, 1, 1.0);
        let c = FromField { n: 4, field: crate::tensor::ConstField(g.data.clone()) };
        let t = torsion(&c, &[0.0; 4]);
        assert_eq!(t.get(0, 0, 1), 1.0);
        assert_eq!(t.get(0, 1, 0), -1.0);
        let lc = LeviCivita::new(RoundS4, 4, DerivEngine::fd());
        assert!(torsion(&lc, &[0.2, 0.1, -0.4, 0.3]).data.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn round_sphere_ricci_is_three_g() {
        let x = [0.3, -0.2, 0.5, 0.1];
        let g = as_mat(RoundS4.eval(&x), 4);
        for (engine, outer, tol) in [
            (DerivEngine::Dual, DerivEngine::Dual, 1e-10),
            (DerivEngine::fd(), DerivEngine::CentralFd { h: DerivEngine::FD_CURVATURE_STEP }, 1e-3),
        ] {
            let lc = LeviCivita::new(RoundS4, 4, engine);
            let ric = ricci(&lc, &x, outer, &chart()).unwrap();
            let rel = (&ric - &g.scale(3.0)).max_abs() / g.max_abs();
            assert!(rel < tol, "{engine:?}: {rel}");
        }
    }

    #[test]
    fn curvature_matches_riemann_and_is_antisymmetric() {
        let lc = LeviCivita::new(RoundS4, 4, DerivEngine::Dual);
        let x = [0.1, 0.4, -0.3, 0.2];
        let (a, b) = ([1.0, 0.5, 0.0, -0.2], [0.0, 1.0, 2.0, 0.3]);
        let r = curvature(&lc, &x, &a, &b, DerivEngine::Dual, &chart()).unwrap();
        let r2 = curvature(&lc, &x, &b, &a, DerivEngine::Dual, &chart()).unwrap();
        assert!((&r + &r2).max_abs() == 0.0);
        let full = riemann(&lc, &x, DerivEngine::Dual, &chart()).unwrap();
        assert!((&full.endo(&a, &b) - &r).max_abs() < 1e-12);
    }

    #[test]
    fn flat_connection_has_no_curvature() {
        let x = [0.1, 0.4, -0.3, 0.2];
        let ric = ricci(&Flat(4), &x, DerivEngine::fd(), &chart()).unwrap();
        assert_eq!(ric.max_abs(), 0.0);
    }
}
