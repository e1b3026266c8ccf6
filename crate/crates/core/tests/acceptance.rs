//! Acceptance criteria at their stated tolerances. Prints one line per
//! criterion and exits nonzero if any fails.

use qgeom::config::SuiteConfig;
use qgeom::report::{emit_json, VerificationReport};
use qgeom::suites::{run, run_named, Suite};
use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

struct Runs {
    cache: HashMap<(Suite, usize), (Vec<VerificationReport>, Duration)>,
}

impl Runs {
    fn get(&mut self, suite: Suite, n: usize) -> &(Vec<VerificationReport>, Duration) {
        self.cache.entry((suite, n)).or_insert_with(|| {
            let cfg = SuiteConfig { n, ..Default::default() };
            let start = Instant::now();
            let out = run(suite, &cfg).expect("default config is valid");
            (out, start.elapsed())
        })
    }
}

/// Failing check names among `reports` whose name passes `keep`.
fn failures(reports: &[VerificationReport], keep: impl Fn(&str) -> bool) -> Vec<String> {
    reports
        .iter()
        .filter(|r| keep(&r.suite) && !r.pass)
        .map(|r| format!("{} = {:?} > {:e}", r.suite, r.max_residual, r.tolerance))
        .collect()
}

struct Criterion {
    title: &'static str,
    problems: Vec<String>,
    detail: String,
}

fn suite_criterion(
    runs: &mut Runs,
    title: &'static str,
    suites: &[Suite],
    ns: &[usize],
    keep: impl Fn(&str) -> bool,
    budget: Option<(usize, Duration)>,
) -> Criterion {
    let mut problems = Vec::new();
    let mut detail = Vec::new();
    for &n in ns {
        let mut elapsed = Duration::ZERO;
        for &s in suites {
            let (reports, t) = runs.get(s, n);
            elapsed += *t;
            problems.extend(failures(reports, &keep).into_iter().map(|f| format!("n={n}: {f}")));
        }
        detail.push(format!("n={n} {:.2}s", elapsed.as_secs_f64()));
        if let Some((bn, limit)) = budget {
            if bn == n && elapsed > limit {
                problems.push(format!("n={n}: runtime {:.1}s exceeds {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()));
            }
        }
    }
    Criterion { title, problems, detail: detail.join(", ") }
}

fn determinism() -> Criterion {
    let cfg = SuiteConfig { n: 1, seed: 42, ..Default::default() };
    let start = Instant::now();
    let a = run_named("all", &cfg).map(|r| emit_json(&r));
    let first = start.elapsed();
    let b = run_named("all", &cfg).map(|r| emit_json(&r));
    let mut problems = Vec::new();
    match (&a, &b) {
        (Ok(x), Ok(y)) if x == y => {}
        (Ok(_), Ok(_)) => problems.push("JSON differs between runs".to_string()),
        _ => problems.push("suite run failed".to_string()),
    }
    if first > Duration::from_secs(300) {
        problems.push(format!("n=1 suite took {:.1}s", first.as_secs_f64()));
    }
    let bytes = a.as_ref().map(|s| s.len()).unwrap_or(0);
    Criterion {
        title: "determinism of `verify all --n 1 --seed 42`",
        problems,
        detail: format!("{bytes} bytes, {:.2}s per run", first.as_secs_f64()),
    }
}

fn main() -> ExitCode {
    let mut runs = Runs { cache: HashMap::new() };
    let secs = Duration::from_secs;
    let is = |names: &'static [&'static str]| move |s: &str| names.iter().any(|n| s.ends_with(&format!("/{n}")));
    let all = |_: &str| true;
    let mu_only =
        is(&["parallel", "ricci-symmetric", "ricci-anti-invariant", "pi-h", "omega-transverse", "omega-ricci", "gauge-uniqueness"]);
    let coincidence = is(&["coincidence", "ricci-ratio"]);

    let criteria = vec![
        suite_criterion(&mut runs, "frame algebra", &[Suite::Algebra], &[1, 2], all, Some((2, secs(1)))),
        suite_criterion(&mut runs, "Levi-Civita connection", &[Suite::Connection], &[1, 2], all, Some((2, secs(30)))),
        suite_criterion(&mut runs, "Weyl flatness and projective invariance", &[Suite::WeylFlat], &[1, 2], all, None),
        suite_criterion(&mut runs, "fixed points of the uniform action", &[Suite::FixedPoints], &[1, 2], all, None),
        suite_criterion(&mut runs, "twistor equation and identities", &[Suite::Twistor], &[1, 2], all, None),
        suite_criterion(&mut runs, "μ-connection structure", &[Suite::MuConnection], &[1, 2], mu_only, None),
        suite_criterion(&mut runs, "coincidence on the fixed set", &[Suite::MuConnection], &[1, 2], coincidence, None),
        suite_criterion(&mut runs, "Chern pairings", &[Suite::Chern], &[1, 2], all, Some((2, secs(120)))),
        suite_criterion(&mut runs, "Swann lift and zero-set classifier", &[Suite::Swann, Suite::Pontecorvo], &[1, 2], all, None),
        suite_criterion(&mut runs, "quotient examples", &[Suite::Grassmann, Suite::Tcpn], &[2, 3], all, None),
        determinism(),
    ];

    let mut failed = 0;
    for (k, c) in criteria.iter().enumerate() {
        let verdict = if c.problems.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {} ({})", k + 1, c.title, c.detail);
        for p in &c.problems {
            println!("             {p}");
        }
        if !c.problems.is_empty() {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
