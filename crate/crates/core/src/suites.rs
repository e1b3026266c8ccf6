//! Named verification suites. Each suite runs a fixed list of checks in a
//! fixed order, so the same configuration always yields the same reports.

use crate::chern::{self, gauge_change, grid_drift, HalfLogGradient};
use crate::config::{ConfigError, SuiteConfig};
use crate::error::Result;
use crate::hpn::{
    complex_invariance, connection_coincidence, einstein_fit, find_fixed_components, fixed_tangent_space, fq_fz, frame_residual,
    geodesy_defect, hessian_identity_check, nabla_x, ricci_ratio, submersion_frame, transversality_angle, CircleAction, FixedKind, HPn,
    SearchOptions,
};
use crate::linalg::{self, Mat};
use crate::quat::{qmul, Q64, UNITS};
use crate::quaternionic::{
    check_twistor, modify_connection, mu_connection, mu_structure, q_inner, q_preservation_residual, twistor_identities, QCurvature,
    QStructure, StructureFrame,
};
use crate::quotient::{self, mu_circ_covariance, mu_circ_hat, weighted_fixed_sets_on_gr, GrSearchOptions};
use crate::report::VerificationReport;
use crate::swann::{self, SpherePoint, ZeroSetLabel};
use crate::tensor::{as_mat, metricity_residual, riemann, torsion, Connection, Field, Grid, Surface};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Algebra,
    Connection,
    WeylFlat,
    FixedPoints,
    Twistor,
    MuConnection,
    Chern,
    Swann,
    Pontecorvo,
    Grassmann,
    Tcpn,
}

impl Suite {
    /// Run order of `all`.
    pub const ALL: [Suite; 11] = [
        Suite::Algebra,
        Suite::Connection,
        Suite::WeylFlat,
        Suite::FixedPoints,
        Suite::Twistor,
        Suite::MuConnection,
        Suite::Chern,
        Suite::Swann,
        Suite::Pontecorvo,
        Suite::Grassmann,
        Suite::Tcpn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Connection => "connection",
            Suite::WeylFlat => "weyl-flat",
            Suite::FixedPoints => "fixed-points",
            Suite::Twistor => "twistor",
            Suite::MuConnection => "mu-connection",
            Suite::Chern => "chern",
            Suite::Swann => "swann",
            Suite::Pontecorvo => "pontecorvo",
            Suite::Grassmann => "grassmann",
            Suite::Tcpn => "tcpn",
        }
    }

    fn salt(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).unwrap_or(0) as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = SuiteError;
    fn from_str(s: &str) -> std::result::Result<Self, SuiteError> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| SuiteError::Unknown(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuiteError {
    #[error("unknown suite {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Threshold of a check; the class decides which configuration override applies.
#[derive(Clone, Copy, Debug)]
enum Tol {
    Fixed(f64),
    FirstDeriv(f64),
    Curvature(f64),
    Integral(f64),
}

impl Tol {
    fn resolve(self, cfg: &SuiteConfig) -> f64 {
        match self {
            Tol::Fixed(t) => t,
            Tol::FirstDeriv(t) => cfg.tol_first_deriv.unwrap_or(t),
            Tol::Curvature(t) => cfg.tol_curvature.unwrap_or(t),
            Tol::Integral(t) => cfg.tol_integral_rel.unwrap_or(t),
        }
    }
}

struct Recorder<'a> {
    cfg: &'a SuiteConfig,
    suite: Suite,
    out: Vec<VerificationReport>,
}

impl Recorder<'_> {
    fn check(&mut self, name: &str, anchor: &str, tol: Tol, samples: usize, f: impl FnOnce() -> Result<f64>) {
        let start = Instant::now();
        let outcome = f();
        let millis = if self.cfg.timing { start.elapsed().as_millis() as u64 } else { 0 };
        let (residual, anchor) = match outcome {
            Ok(v) => (v, anchor.to_string()),
            Err(e) => (f64::INFINITY, format!("{anchor} (error: {e})")),
        };
        self.out.push(VerificationReport::new(
            format!("{}/{}", self.suite, name),
            &anchor,
            samples,
            residual,
            tol.resolve(self.cfg),
            self.cfg.seed,
            millis,
        ));
    }
}

/// Largest value, with NaN counted as a failure.
fn worst(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut m: f64 = 0.0;
    for v in values {
        let v = v?;
        if v.is_nan() {
            return Ok(f64::INFINITY);
        }
        m = m.max(v);
    }
    Ok(m)
}

fn mismatch(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

fn rng_for(cfg: &SuiteConfig, suite: Suite, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ (suite.salt() << 40) ^ (stream << 32))
}

fn chart_points(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Points of `ℂⁿ ⊂ ℍⁿ`, the fixed set of the uniform action in chart 0.
fn complex_points(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..4 * n).map(|k| if k % 4 < 2 { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect()).collect()
}

fn complex_vec(rng: &mut ChaCha8Rng, m: usize) -> Vec<Complex64> {
    (0..m).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

fn sphere_point(rng: &mut ChaCha8Rng, m: usize) -> SpherePoint {
    SpherePoint::new(complex_vec(rng, m), complex_vec(rng, m))
}

fn small_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Runs one suite.
pub fn run(suite: Suite, cfg: &SuiteConfig) -> std::result::Result<Vec<VerificationReport>, SuiteError> {
    cfg.validate()?;
    let mut r = Recorder { cfg, suite, out: Vec::new() };
    match suite {
        Suite::Algebra => algebra(&mut r),
        Suite::Connection => connection(&mut r),
        Suite::WeylFlat => weyl_flat(&mut r),
        Suite::FixedPoints => fixed_points(&mut r),
        Suite::Twistor => twistor(&mut r),
        Suite::MuConnection => mu_conn(&mut r),
        Suite::Chern => chern_suite(&mut r),
        Suite::Swann => swann_suite(&mut r),
        Suite::Pontecorvo => pontecorvo(&mut r),
        Suite::Grassmann => grassmann(&mut r),
        Suite::Tcpn => tcpn(&mut r),
    }
    Ok(r.out)
}

/// Runs a suite by name; `all` runs every suite in [`Suite::ALL`] order.
pub fn run_named(name: &str, cfg: &SuiteConfig) -> std::result::Result<Vec<VerificationReport>, SuiteError> {
    if name == "all" {
        let mut out = Vec::new();
        for s in Suite::ALL {
            out.extend(run(s, cfg)?);
        }
        Ok(out)
    } else {
        run(name.parse()?, cfg)
    }
}

fn algebra(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(100);
    let mut rng = rng_for(cfg, r.suite, 0);
    let points = chart_points(&mut rng, 4 * n, samples);
    let quats: Vec<(Q64, Q64)> = (0..samples)
        .map(|_| {
            let a = small_vec(&mut rng, 4, 1.0);
            let b = small_vec(&mut rng, 4, 1.0);
            (Q64::from_slice(&a), Q64::from_slice(&b))
        })
        .collect();

    r.check("units", "i² = j² = k² = ijk = −1", Tol::Fixed(0.0), 4, || {
        let minus_one = [-1.0, 0.0, 0.0, 0.0];
        let [i, j, k] = UNITS;
        let products = [qmul(i, i), qmul(j, j), qmul(k, k), qmul(qmul(i, j), k)];
        Ok(products.iter().flat_map(|p| p.to_array().into_iter().zip(minus_one).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max))
    });
    r.check("left-right", "left and right multiplication commute", Tol::Fixed(1e-12), samples, || {
        worst(quats.iter().map(|(a, b)| {
            let (l, rt) = (a.left_matrix(), b.right_matrix());
            Ok((&(&l * &rt) - &(&rt * &l)).max_abs())
        }))
    });
    r.check("norm", "|ab| = |a||b|", Tol::Fixed(1e-12), samples, || {
        worst(quats.iter().map(|(a, b)| Ok((qmul(*a, *b).norm() - a.norm() * b.norm()).abs())))
    });

    let space = match HPn::new(n) {
        Ok(s) => s,
        Err(_) => return,
    };
    r.check("frame", "I_a I_b = −δ_ab + ε_abc I_c and Q-orthonormality", Tol::Fixed(1e-10), samples, || {
        worst(points.iter().map(|q| Ok(frame_residual(&space, q))))
    });
    r.check("submersion-frame", "chart frame equals the pushed-forward right multiplication", Tol::Fixed(1e-10), samples, || {
        let qf = space.q_frame();
        worst(points.iter().map(|q| {
            let (a, b) = (submersion_frame(q), qf.frame(q));
            Ok((0..3).map(|k| (&a[k] - &b[k]).max_abs()).fold(0.0, f64::max))
        }))
    });
    r.check("hermitian", "each I_a is g-orthogonal", Tol::Fixed(1e-10), samples, || {
        let qf = space.q_frame();
        let metric = space.metric();
        worst(points.iter().map(|q| {
            let g = as_mat(metric.eval(q), 4 * n);
            Ok(qf.frame(q).iter().map(|i| (&(&(&i.transpose() * &g) * i) - &g).max_abs()).fold(0.0, f64::max))
        }))
    });
}

fn connection(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(20);
    let Ok(space) = HPn::new(n) else { return };
    let Ok(chart) = space.chart(0) else { return };
    let points = chart_points(&mut rng_for(cfg, r.suite, 0), 4 * n, samples);
    let lc = space.levi_civita();
    let engine = cfg.engine();

    r.check("torsion", "Levi-Civita torsion vanishes", Tol::Fixed(0.0), samples, || {
        worst(points.iter().map(|q| Ok(torsion(&lc, q).data.iter().map(|v| v.abs()).fold(0.0, f64::max))))
    });
    r.check("closed-form", "closed-form Christoffel symbols match metric derivatives", Tol::FirstDeriv(1e-5), samples, || {
        let oracle = space.levi_civita_from_metric(engine);
        worst(points.iter().map(|q| {
            let (a, b) = (lc.christoffel(q), oracle.christoffel(q));
            Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        }))
    });
    r.check("metricity", "∇g = 0", Tol::FirstDeriv(1e-5), samples, || {
        let metric = space.metric();
        worst(points.iter().map(|q| Ok(metricity_residual(&lc, &metric, q, engine))))
    });
    r.check("q-preservation", "∇ preserves the quaternionic structure", Tol::FirstDeriv(1e-4), samples, || {
        let qf = space.q_frame();
        worst(points.iter().map(|q| Ok(q_preservation_residual(&lc, &qf, q, engine))))
    });

    let fits: Result<Vec<(f64, f64)>> = points
        .iter()
        .map(|q| {
            let ric = riemann(&lc, q, cfg.curvature_engine(), &chart)?.ricci();
            Ok(einstein_fit(&ric, &as_mat(space.metric().eval(q), 4 * n)))
        })
        .collect();
    r.check("einstein", "Ric = λg with λ constant across samples", Tol::Curvature(1e-3), samples, || {
        let fits = fits.clone()?;
        let l0 = fits[0].0;
        worst(fits.iter().map(|(l, defect)| Ok(defect.max((l - l0).abs() / l0.abs()))))
    });
    r.check("einstein-constant", "λ = 4(n+2)", Tol::Curvature(1e-3), samples, || {
        let fits = fits.clone()?;
        let target = 4.0 * (n as f64 + 2.0);
        worst(fits.iter().map(|(l, _)| Ok((l - target).abs() / target)))
    });
}

fn weyl_flat(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(20);
    let Ok(space) = HPn::new(n) else { return };
    let Ok(chart) = space.chart(0) else { return };
    let mut rng = rng_for(cfg, r.suite, 0);
    let points = chart_points(&mut rng, 4 * n, samples);
    let shifts: Vec<Vec<f64>> = (0..samples.div_ceil(4)).map(|_| small_vec(&mut rng, 4 * n, 0.5)).collect();
    let lc = space.levi_civita();
    let qf = space.q_frame();
    let engine = cfg.curvature_engine();

    r.check("weyl", "‖W‖ = 0 for the Levi-Civita connection", Tol::Curvature(1e-3), samples, || {
        worst(points.iter().map(|q| Ok(QCurvature::at(&lc, &qf, q, engine, &chart)?.weyl_norm())))
    });
    r.check("weyl-invariance", "W is unchanged by ∇ ↦ ∇ + S^ξ", Tol::Curvature(1e-3), shifts.len(), || {
        worst(points.iter().zip(&shifts).map(|(q, wobble)| {
            let base = QCurvature::at(&lc, &qf, q, engine, &chart)?;
            let shifted = modify_connection(space.levi_civita(), HalfLogGradient { wobble: wobble.clone() }, space.q_frame());
            let other = QCurvature::at(&shifted, &qf, q, engine, &chart)?;
            Ok(base.weyl_distance(&other))
        }))
    });
}

type Shape = Vec<(usize, FixedKind)>;

fn fixed_shape(space: &HPn, weights: Vec<i64>, seed: u64) -> Result<Shape> {
    let opts = SearchOptions { seeds: 40, seed, ..Default::default() };
    let found = find_fixed_components(space, &CircleAction::new(weights)?, &opts)?;
    let mut v: Shape = found.components.iter().map(|c| (c.dim, c.kind)).collect();
    v.sort_by_key(|x| x.0);
    Ok(v)
}

fn fixed_points(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(30);
    let Ok(space) = HPn::new(n) else { return };
    let mut rng = rng_for(cfg, r.suite, 0);
    let on_f = complex_points(&mut rng, n, samples);
    let generic = chart_points(&mut rng, 4 * n, samples.div_ceil(3));
    let action = CircleAction::uniform(n);
    let field = action.field(0);
    let lc = space.levi_civita();
    let qf = space.q_frame();
    let complex_tf = Mat::from_columns(&(0..4 * n).filter(|k| k % 4 < 2).map(|k| crate::tensor::unit(4 * n, k)).collect::<Vec<_>>());

    r.check("vanishing", "X = 0 on ℂⁿ", Tol::Fixed(0.0), samples, || worst(on_f.iter().map(|q| Ok(linalg::norm(&field.eval(q))))));
    r.check("rank", "rank ∇X = 2n on the fixed set", Tol::Fixed(0.0), samples, || {
        worst(on_f.iter().map(|q| Ok((linalg::rank(&nabla_x(&lc, &field, q), 1e-8) as f64 - 2.0 * n as f64).abs())))
    });
    r.check("fq-norm", "‖f_Q‖ is constant on the fixed set", Tol::FirstDeriv(1e-4), samples, || {
        let norms: Vec<f64> = on_f
            .iter()
            .map(|q| {
                let f = fq_fz(&lc, &qf, &field, q, 1e-6).q_part;
                q_inner(&f, &f, n).sqrt()
            })
            .collect();
        let mean = norms.iter().sum::<f64>() / norms.len() as f64;
        worst(norms.iter().map(|v| Ok((v - mean).abs())))
    });
    r.check("kernel", "TF = Ker ∇X (sine of the largest principal angle)", Tol::FirstDeriv(1e-5), samples, || {
        worst(on_f.iter().map(|q| {
            let tf = fixed_tangent_space(&lc, &field, q);
            if tf.cols != complex_tf.cols {
                return Ok(f64::INFINITY);
            }
            Ok(linalg::principal_angles(&tf, &complex_tf).into_iter().fold(0.0, f64::max).sin())
        }))
    });
    r.check("transversal", "0.1 / smallest angle between TF and I₂TF", Tol::Fixed(1.0), samples, || {
        worst(on_f.iter().map(|q| {
            let tf = fixed_tangent_space(&lc, &field, q);
            Ok(0.1 / transversality_angle(&qf.frame(q)[1], &tf))
        }))
    });
    r.check("complex", "I = f_Q/‖f_Q‖ preserves TF", Tol::FirstDeriv(1e-5), samples, || {
        worst(on_f.iter().map(|q| {
            let tf = fixed_tangent_space(&lc, &field, q);
            Ok(complex_invariance(&fq_fz(&lc, &qf, &field, q, 1e-6).q_part, &tf))
        }))
    });
    r.check("geodesic", "the fixed set is totally geodesic", Tol::FirstDeriv(1e-4), samples, || {
        worst(on_f.iter().map(|q| Ok(geodesy_defect(&lc, &fixed_tangent_space(&lc, &field, q), q))))
    });
    r.check("hessian", "∇f_Q equals the Q-part of R(·, X)", Tol::FirstDeriv(1e-5), generic.len(), || {
        worst(generic.iter().map(|q| Ok(hessian_identity_check(&lc, &qf, &field, q).residual())))
    });
    r.check("components", "uniform weights fix one transversal complex component of dimension 2n", Tol::Fixed(0.0), 40, || {
        Ok(mismatch(fixed_shape(&space, vec![1; n + 1], cfg.seed)? == vec![(2 * n, FixedKind::TransversalComplex)]))
    });
    let (weights, expected) = if n == 1 {
        (vec![1, 2], vec![(0, FixedKind::Isolated), (0, FixedKind::Isolated)])
    } else {
        let mut w = vec![0; n + 1];
        w[n] = 1;
        (w, vec![(0, FixedKind::Isolated), (4 * (n - 1), FixedKind::Quaternionic)])
    };
    r.check("weighted-components", "a weighted action has the expected fixed components", Tol::Fixed(0.0), 40, || {
        Ok(mismatch(fixed_shape(&space, weights, cfg.seed)? == expected))
    });
}

fn twistor(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(20);
    let Ok(space) = HPn::new(n) else { return };
    let mut rng = rng_for(cfg, r.suite, 0);
    let points = chart_points(&mut rng, 4 * n, samples);
    let wobble = small_vec(&mut rng, 4 * n, 0.3);
    let action = CircleAction::uniform(n);
    let t = space.twistor(&action, 0);
    let qf = space.q_frame();
    let engine = cfg.engine();

    r.check("equation", "∇μ̄ lies in the twistor image", Tol::FirstDeriv(1e-4), samples, || {
        worst(points.iter().map(|q| Ok(check_twistor(&t, &qf, q, engine).residual())))
    });
    let ids: Vec<Result<_>> = points.iter().map(|q| twistor_identities(&t, &qf, q, engine)).collect();
    r.check("norm-gradient", "d‖μ̄‖ = ξ ∘ I", Tol::FirstDeriv(1e-4), samples, || {
        worst(ids.iter().map(|v| v.as_ref().map(|x| x.norm_gradient).map_err(Clone::clone)))
    });
    r.check("eta", "η = 2 d log ‖μ̄‖", Tol::FirstDeriv(1e-4), samples, || {
        worst(ids.iter().map(|v| v.as_ref().map(|x| x.eta).map_err(Clone::clone)))
    });
    r.check("gauge", "a rescaled datum with the shifted connection still solves the equation", Tol::FirstDeriv(1e-4), samples, || {
        let changed = gauge_change(space.twistor(&action, 0), space.q_frame(), 0.7, wobble.clone());
        worst(points.iter().map(|q| Ok(check_twistor(&changed, &qf, q, engine).residual())))
    });
}

fn mu_conn(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(10);
    let Ok(space) = HPn::new(n) else { return };
    let Ok(chart) = space.chart(0) else { return };
    let mut rng = rng_for(cfg, r.suite, 0);
    let points = chart_points(&mut rng, 4 * n, samples);
    let on_f = complex_points(&mut rng, n, samples);
    let gauges: Vec<(f64, Vec<f64>)> = (0..samples).map(|_| (rng.gen_range(0.2..5.0), small_vec(&mut rng, 4 * n, 0.3))).collect();
    let action = CircleAction::uniform(n);
    let mu = space.mu_connection(&action, 0);

    let st: Vec<Result<_>> = points.iter().map(|q| mu_structure(&mu, q, &chart)).collect();
    let pick = |f: fn(&crate::quaternionic::MuStructure) -> f64| worst(st.iter().map(|v| v.as_ref().map(f).map_err(Clone::clone)));
    r.check("parallel", "∇^μ I = 0 for I = μ̄/‖μ̄‖", Tol::FirstDeriv(1e-4), samples, || pick(|s| s.nabla_i));
    r.check("ricci-symmetric", "Ric^μ is symmetric", Tol::Curvature(1e-4), samples, || pick(|s| s.ricci_skew));
    r.check("ricci-anti-invariant", "Ric^μ(I₂·, I₂·) = −Ric^μ", Tol::Curvature(1e-4), samples, || pick(|s| s.anti_invariance));
    r.check("pi-h", "the Π_h part of Ric^μ vanishes", Tol::Curvature(1e-4), samples, || pick(|s| s.pi_h));

    let forms: Vec<Result<chern::FourFormCheck>> = points
        .iter()
        .map(|q| {
            let curv = chern::aligned_curvature(&mu, q)?;
            chern::four_form_residual(&curv, &chern::ric_i(&curv.ricci, &curv.frame[0]), n)
        })
        .collect();
    r.check("omega-transverse", "Ω₂ = Ω₃ = 0 in the frame aligned with I", Tol::Curvature(1e-4), samples, || {
        worst(forms.iter().map(|v| v.as_ref().map(|x| x.transverse).map_err(Clone::clone)))
    });
    r.check("omega-ricci", "Ω₁ = (1/n) Ric_I", Tol::Curvature(1e-4), samples, || {
        worst(forms.iter().map(|v| v.as_ref().map(|x| x.omega_vs_ricci).map_err(Clone::clone)))
    });
    r.check("gauge-uniqueness", "∇^μ does not depend on the gauge", Tol::Fixed(1e-6), samples, || {
        worst(points.iter().zip(&gauges).map(|(q, (c, wobble))| {
            let changed = gauge_change(space.twistor(&action, 0), space.q_frame(), *c, wobble.clone());
            let other = mu_connection(changed, space.q_frame(), crate::tensor::DerivEngine::Dual);
            other.guard(q)?;
            let (a, b) = (mu.christoffel(q), other.christoffel(q));
            Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        }))
    });
    let lc = space.levi_civita();
    let field = action.field(0);
    r.check("coincidence", "∇^μ = ∇ along the fixed set", Tol::FirstDeriv(1e-4), samples, || {
        worst(on_f.iter().map(|q| {
            let c = connection_coincidence(&mu, &fixed_tangent_space(&lc, &field, q), q)?;
            Ok(c.difference.max(c.alpha_on_f))
        }))
    });
    r.check("ricci-ratio", "n Ric^g = (n+2) Ric^μ on TF (relative)", Tol::Curvature(1e-3), samples, || {
        worst(on_f.iter().map(|q| Ok(ricci_ratio(&space, &mu, &fixed_tangent_space(&lc, &field, q), q)?.on_tf)))
    });
}

fn chern_suite(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let nf = n as f64;
    let (coarse, fine) = (Grid::square(cfg.grid), Grid::square(2 * cfg.grid));
    let nodes = cfg.grid * cfg.grid;
    let rc = chern::restriction_check(n, coarse);
    let get = |f: fn(&chern::RestrictionReport) -> f64| rc.as_ref().map(f).map_err(Clone::clone);

    r.check("c1-fixed", "⟨c₁(F), line⟩ = n + 1 (relative)", Tol::Integral(0.01), nodes, || {
        get(|x| x.c1_f.value).map(|v| (v - (nf + 1.0)).abs() / (nf + 1.0))
    });
    r.check("c1-ambient", "⟨ι*c₁(M), line⟩ = 2n (relative)", Tol::Integral(0.01), nodes, || {
        get(|x| x.c1_m.value).map(|v| (v - 2.0 * nf).abs() / (2.0 * nf))
    });
    r.check("restriction", "2n c₁(F) = (n+1) ι*c₁(M) (relative)", Tol::Integral(0.01), nodes, || get(|x| x.defect));
    r.check("pointwise", "n Tr(R^F ∘ I) = −(n+1) Ric^μ_I on TF (relative)", Tol::Curvature(1e-3), 3, || get(|x| x.pointwise));
    r.check("flat-premise", "‖W‖ = 0 on the line", Tol::Curvature(1e-3), 1, || get(|x| x.weyl));
    r.check("drift", "relative change of both pairings from grid G to 2G", Tol::Fixed(2e-3), 4 * nodes, || {
        let rc = rc.clone()?;
        let f = chern::c1_pairing_f(n, fine)?;
        let m = chern::c1_pairing_m_restricted(n, fine)?;
        Ok(grid_drift(rc.c1_f.value, f.value).max(grid_drift(rc.c1_m.value, m.value)))
    });
    let half = Grid::square((cfg.grid / 2).max(4));
    let suite = r.suite;
    r.check("gauge", "the ambient pairing is unchanged by a gauge change", Tol::Fixed(1e-6), half.ns * half.nt, || {
        let space = HPn::new(n)?;
        let action = CircleAction::uniform(n);
        let plain = chern::c1_pairing_m(&space, &space.mu_connection(&action, 0), half)?;
        let mut rng = rng_for(cfg, suite, 0);
        let wobble = small_vec(&mut rng, 4 * n, 0.3);
        let datum = gauge_change(space.twistor(&action, 0), space.q_frame(), rng.gen_range(0.2..5.0), wobble);
        let changed = chern::c1_pairing_m(&space, &mu_connection(datum, space.q_frame(), crate::tensor::DerivEngine::Dual), half)?;
        Ok((changed.value - plain.value).abs() / plain.value.abs())
    });
    if n >= 2 {
        let mut rng = rng_for(cfg, r.suite, 1);
        let line = chern::fixed_line(n);
        let mut pts = vec![line.point(1.0, 0.5)];
        pts.extend(chart_points(&mut rng, 4 * n, 2).into_iter().map(|p| p.iter().map(|v| 0.5 * v).collect::<Vec<f64>>()));
        r.check("four-form", "n²Θ = Ric_I ∧ Ric_I (relative)", Tol::Curvature(1e-3), pts.len(), || {
            Ok(chern::char4form_consistency(n, &pts)?.four_form)
        });
    }
}

fn swann_suite(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(20);
    let Ok(space) = HPn::new(n) else { return };
    let mut rng = rng_for(cfg, r.suite, 0);
    let points: Vec<Vec<f64>> = chart_points(&mut rng, 4 * n, samples);
    let fibers: Vec<Q64> = (0..samples)
        .map(|_| {
            swann::unit_quat([
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ])
            .scale(rng.gen_range(0.3..3.0))
        })
        .collect();
    let spheres: Vec<SpherePoint> = (0..samples).map(|_| sphere_point(&mut rng, n + 1)).collect();
    let reals: Vec<Vec<Complex64>> = (0..samples.max(100)).map(|_| complex_vec(&mut rng, 2 * (n + 1))).collect();
    let actions = [CircleAction::uniform(n), CircleAction::new((1..=n as i64 + 1).collect()).expect("distinct weights")];
    let theta = cfg.theta;

    r.check("lift", "θ(X̂) on the bundle equals μ̄ in the matching frame", Tol::FirstDeriv(1e-4), 2 * samples, || {
        worst(actions.iter().flat_map(|a| {
            let space = &space;
            points.iter().zip(&fibers).map(move |(q, l)| Ok(swann::lift_identity(space, a, q, *l, theta).residual))
        }))
    });
    r.check("norm", "‖μ̂‖ = ‖μ̄‖ on the section", Tol::Fixed(1e-10), 2 * samples, || {
        worst(actions.iter().flat_map(|a| {
            let space = &space;
            points.iter().map(move |q| Ok(swann::norm_agreement(space, a, q, theta)))
        }))
    });
    r.check("vertical", "dμ̂(z·e_a) = 2 μ̂ × e_a", Tol::FirstDeriv(1e-4), 2 * samples, || {
        worst(actions.iter().flat_map(|a| spheres.iter().map(move |z| Ok(swann::vertical_identity_residual(z, a, theta)))))
    });
    r.check(
        "structure-equation",
        "dμ̄_a = −½ ι_X Ω_a − μ̄_c θ_b + μ̄_b θ_c",
        Tol::Curvature(1e-3),
        samples.div_ceil(4),
        || {
            let fr = space.q_frame();
            worst(
                points
                    .iter()
                    .take(samples.div_ceil(4))
                    .map(|q| Ok(swann::moment_derivative_check(&space, &actions[0], &StructureFrame(&fr), q)?.residual)),
            )
        },
    );
    r.check("horizontal", "the lifted field pairs to zero with horizontal vectors", Tol::Fixed(1e-10), samples, || {
        worst(points.iter().map(|q| Ok(swann::horizontal_pairing_residual(&space, &actions[0], q))))
    });
    r.check("coordinate-change", "real-form coordinates reproduce the pairing and both norms", Tol::Fixed(1e-12), reals.len(), || {
        worst(reals.iter().map(|z| {
            let s: f64 = z.iter().map(|c| c.norm_sqr()).sum();
            Ok(swann::coordinate_change_check(z).max() / s.max(1.0))
        }))
    });
}

fn pontecorvo(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(500);
    let Ok(space) = HPn::new(n) else { return };
    let mut rng = rng_for(cfg, r.suite, 0);
    let points: Vec<SpherePoint> = (0..samples)
        .map(|k| {
            let g = sphere_point(&mut rng, n + 1);
            if k % 2 == 0 {
                swann::zero_set_point(g.u, g.v)
            } else {
                g
            }
        })
        .collect();

    r.check("classifier", "disagreements between the zero-set label and f_Q = 0", Tol::Fixed(0.0), samples, || {
        Ok(points.iter().filter(|z| !swann::zero_set_sample(&space, z, 1e-8).agrees).count() as f64)
    });
    r.check("domains", "hand-picked points land in the expected region", Tol::Fixed(0.0), 4, || {
        let e = |k: usize| {
            let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
            v[k] = Complex64::new(1.0, 0.0);
            v
        };
        let zero = vec![Complex64::new(0.0, 0.0); n + 1];
        let ones = vec![Complex64::new(1.0, 0.0); n + 1];
        let cases = [
            (SpherePoint::new(e(0), zero.clone()), ZeroSetLabel::PontecorvoDomain),
            (SpherePoint::new(zero, e(0)), ZeroSetLabel::OppositeDomain),
            (SpherePoint::new(e(0), e(1)), ZeroSetLabel::OnZeroSet),
            (SpherePoint::new(ones.clone(), ones), ZeroSetLabel::Generic),
        ];
        Ok(cases.iter().filter(|(z, want)| swann::classify(z, 1e-10).label != *want).count() as f64)
    });
}

fn grassmann(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(100);
    let mut rng = rng_for(cfg, r.suite, 0);
    let points: Vec<(SpherePoint, f64, f64)> =
        (0..samples).map(|_| (sphere_point(&mut rng, n + 1), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI))).collect();

    r.check("mu-circ-hand", "μ̂° on hand-computed points", Tol::Fixed(0.0), 4, || {
        let c = |re: f64| {
            let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
            v[0] = Complex64::new(re, 0.0);
            v
        };
        let cases = [
            (SpherePoint::new(c(1.0), c(0.0)), [1.0, 0.0, 0.0]),
            (SpherePoint::new(c(0.0), c(1.0)), [-1.0, 0.0, 0.0]),
            (SpherePoint::new(c(1.0), c(1.0)), [0.0, 0.0, 2.0]),
            (SpherePoint::new(c(0.0), c(0.0)), [0.0, 0.0, 0.0]),
        ];
        Ok(cases.iter().map(|(z, want)| (0..3).map(|k| (mu_circ_hat(z)[k] - want[k]).abs()).fold(0.0, f64::max)).fold(0.0, f64::max))
    });
    r.check("covariance", "μ̂° is invariant on the left and rotates by 2t on the fiber", Tol::Fixed(1e-10), samples, || {
        worst(points.iter().map(|(z, theta, t)| {
            let s: f64 = z.u.iter().chain(&z.v).map(|c| c.norm_sqr()).sum();
            Ok(mu_circ_covariance(z, *theta, *t).max() / s.max(1.0))
        }))
    });
    r.check("zero-locus", "disagreements between μ̂° = 0 and u₀ = v₀ = 0 on the zero set", Tol::Fixed(0.0), 1000, || {
        let (agree, total) = quotient::mu_circ_zero_locus(n, 1000, cfg.seed);
        Ok((total - agree) as f64)
    });
    let opts = GrSearchOptions { seed: cfg.seed, ..Default::default() };
    let sets = [(3usize, 1i64, 2i64, vec![2usize, 0]), (4, 2, 1, vec![4, 4])]
        .map(|(m, p, q, want)| (m, weighted_fixed_sets_on_gr(p, q, m, &opts), want));
    for (m, found, want) in &sets {
        let name = format!("gr2-{m}");
        let anchor = format!("fixed components of Gr(2, {m}) have dimensions {want:?}");
        r.check(&name, &anchor, Tol::Fixed(0.0), opts.seeds, || {
            let f = found.clone()?;
            let families_agree = f.components.iter().all(|c| c.dim_agrees && c.family.is_some_and(|fam| fam.dim(*m) == c.dim));
            Ok(mismatch(f.dims() == *want && families_agree))
        });
    }
    r.check("gr2-orbits", "fixed planes are invariant under the circle", Tol::Fixed(1e-8), 2 * opts.seeds, || {
        worst(sets.iter().map(|(_, found, _)| {
            let f = found.clone()?;
            Ok(f.components.iter().map(|c| c.orbit_defect).fold(0.0, f64::max))
        }))
    });
}

fn tcpn(r: &mut Recorder) {
    let cfg = r.cfg;
    let n = cfg.n;
    let samples = cfg.samples_or(200);
    let report = quotient::tcp_phi_report(n, cfg.pairing, samples, cfg.seed);
    let get = |f: fn(&quotient::PhiReport) -> f64| report.as_ref().map(f).map_err(Clone::clone);

    r.check("zero-set", "fraction of images off the zero set", Tol::Fixed(0.0), samples, || get(|x| 1.0 - x.on_zero_set));
    r.check("well-defined", "φ(e^{iθ}·p) and φ(p) lie on one orbit", Tol::Fixed(1e-8), samples, || get(|x| x.well_defined));
    // At n = 1 the quotient is a single point, so there are no distinct images to separate.
    if n == 1 {
        r.check("injective", "the quotient is one point, injectivity is vacuous", Tol::Fixed(1.0), samples / 2, || Ok(0.0));
    } else {
        r.check("injective", "1e-4 / smallest orbit distance between distinct images", Tol::Fixed(1.0), samples / 2, || {
            get(|x| 1e-4 / x.min_separation)
        });
    }
    r.check("zero-section-rank", "rank of φ on the zero section is 2(n−1)", Tol::Fixed(0.0), 1, || {
        get(|x| x.zero_section_rank as f64).map(|v| (v - 2.0 * (n as f64 - 1.0)).abs())
    });
    r.check("commute", "the two circle actions commute", Tol::Fixed(1e-10), 50, || Ok(quotient::action_commutation(n, 50, cfg.seed)));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!(matches!("nope".parse::<Suite>(), Err(SuiteError::Unknown(_))));
    }

    #[test]
    fn algebra_passes_and_is_reproducible() {
        let cfg = SuiteConfig { samples: Some(10), ..Default::default() };
        let a = run(Suite::Algebra, &cfg).unwrap();
        assert!(a.iter().all(|r| r.pass), "{a:#?}");
        assert_eq!(a, run(Suite::Algebra, &cfg).unwrap());
        assert!(a.iter().all(|r| r.suite.starts_with("algebra/") && r.millis == 0));
    }

    #[test]
    fn tolerance_overrides_apply_by_class() {
        let cfg = SuiteConfig { samples: Some(2), tol_first_deriv: Some(1e-30), ..Default::default() };
        let out = run(Suite::Twistor, &cfg).unwrap();
        assert!(out.iter().all(|r| r.tolerance == 1e-30));
        assert!(out.iter().any(|r| !r.pass));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SuiteConfig { n: 0, ..Default::default() };
        assert_eq!(run(Suite::Algebra, &cfg), Err(SuiteError::Config(ConfigError::ZeroDimension)));
        assert!(run_named("bogus", &SuiteConfig::default()).is_err());
    }

    #[test]
    fn hermitian_pairing_misses_the_zero_set() {
        let cfg = SuiteConfig { samples: Some(20), pairing: quotient::Pairing::Hermitian, n: 2, ..Default::default() };
        let out = run(Suite::Tcpn, &cfg).unwrap();
        assert!(!out.iter().find(|r| r.suite == "tcpn/zero-set").unwrap().pass);
    }
}
