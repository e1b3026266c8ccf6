use qgeom::config::{EngineMode, SuiteConfig};
use qgeom::quotient::Pairing;
use qgeom::report::{emit_json, VerificationReport};
use qgeom::suites::{run, run_named, Suite};
use qgeom::swann::ThetaConvention;
use std::collections::HashSet;

fn quick(n: usize) -> SuiteConfig {
    SuiteConfig { n, samples: Some(4), grid: 8, ..Default::default() }
}

fn find<'a>(reports: &'a [VerificationReport], name: &str) -> &'a VerificationReport {
    reports.iter().find(|r| r.suite == name).unwrap_or_else(|| panic!("missing {name}"))
}

#[test]
fn every_suite_passes_at_small_sample_counts() {
    for s in Suite::ALL {
        if s == Suite::Chern {
            continue;
        }
        let out = run(s, &quick(1)).unwrap();
        assert!(!out.is_empty(), "{s}");
        assert!(out.iter().all(|r| r.pass), "{s}: {out:#?}");
    }
}

#[test]
fn check_names_are_unique_and_prefixed() {
    let out = run_named("all", &quick(1)).unwrap();
    let names: HashSet<&str> = out.iter().map(|r| r.suite.as_str()).collect();
    assert_eq!(names.len(), out.len());
    for r in &out {
        let prefix = r.suite.split('/').next().unwrap();
        assert!(prefix.parse::<Suite>().is_ok(), "{}", r.suite);
        assert_eq!(r.pass, r.max_residual.is_some_and(|v| v <= r.tolerance));
    }
}

#[test]
fn finite_differences_meet_first_derivative_tolerances() {
    let cfg = SuiteConfig { engine: EngineMode::Fd, ..quick(1) };
    for s in [Suite::Connection, Suite::Twistor, Suite::WeylFlat] {
        let out = run(s, &cfg).unwrap();
        assert!(out.iter().all(|r| r.pass), "{out:#?}");
    }
    let fd = run(Suite::Connection, &cfg).unwrap();
    let dual = run(Suite::Connection, &quick(1)).unwrap();
    let res = |rs: &[VerificationReport]| find(rs, "connection/metricity").max_residual.unwrap();
    assert!(res(&fd) > res(&dual));
}

#[test]
fn alternative_conventions_are_measurably_wrong() {
    let reversed = run(Suite::Swann, &SuiteConfig { theta: ThetaConvention::Reversed, ..quick(1) }).unwrap();
    assert!(!find(&reversed, "swann/lift").pass);
    let hermitian = run(Suite::Tcpn, &SuiteConfig { pairing: Pairing::Hermitian, ..quick(2) }).unwrap();
    assert!(!find(&hermitian, "tcpn/zero-set").pass);
}

#[test]
fn seeds_change_samples_but_not_verdicts() {
    let a = run(Suite::FixedPoints, &SuiteConfig { seed: 1, ..quick(2) }).unwrap();
    let b = run(Suite::FixedPoints, &SuiteConfig { seed: 2, ..quick(2) }).unwrap();
    assert!(a.iter().chain(&b).all(|r| r.pass));
    assert_ne!(emit_json(&a), emit_json(&b));
}

#[test]
fn timing_is_opt_in() {
    let out = run(Suite::Algebra, &SuiteConfig { timing: true, ..quick(1) }).unwrap();
    assert!(out.iter().all(|r| r.pass));
    let plain = run(Suite::Algebra, &quick(1)).unwrap();
    assert!(plain.iter().all(|r| r.millis == 0));
}

#[test]
fn small_grid_chern_runs_and_reports_drift() {
    let out = run(Suite::Chern, &SuiteConfig { grid: 16, ..quick(1) }).unwrap();
    assert!(find(&out, "chern/restriction").pass);
    assert!(find(&out, "chern/c1-fixed").pass);
}
