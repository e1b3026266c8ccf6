//! Uniform check records and their JSON and markdown renderings.

use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// One check: the largest residual seen over `samples` evaluations
/// against its threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `suite/check`, e.g. `connection/torsion`.
    pub suite: String,
    /// The identity being checked, in words.
    pub anchor: String,
    pub samples: usize,
    /// `None` when the check could not be evaluated.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
    pub millis: u64,
}

impl VerificationReport {
    pub fn new(suite: String, anchor: &str, samples: usize, max_residual: f64, tolerance: f64, seed: u64, millis: u64) -> Self {
        let finite = max_residual.is_finite();
        VerificationReport {
            suite,
            anchor: anchor.to_string(),
            samples,
            max_residual: finite.then_some(max_residual),
            tolerance,
            pass: finite && max_residual <= tolerance,
            seed,
            millis,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Md,
}

pub fn all_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// Pretty JSON array with a trailing newline; identical inputs give identical bytes.
pub fn emit_json(reports: &[VerificationReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
    s.push('\n');
    s
}

pub fn emit_markdown(reports: &[VerificationReport]) -> String {
    let mut s = String::from("| check | identity | samples | max residual | tolerance | result |\n|---|---|---:|---:|---:|---|\n");
    for r in reports {
        let res = r.max_residual.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3e}"));
        let verdict = if r.pass { "pass" } else { "FAIL" };
        let _ = writeln!(s, "| {} | {} | {} | {} | {:.1e} | {} |", r.suite, r.anchor, r.samples, res, r.tolerance, verdict);
    }
    s
}

pub fn emit(reports: &[VerificationReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => emit_json(reports),
        ReportFormat::Md => emit_markdown(reports),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(res: f64, tol: f64) -> VerificationReport {
        VerificationReport::new("demo/check".into(), "x = y", 3, res, tol, 42, 0)
    }

    #[test]
    fn pass_iff_residual_within_tolerance() {
        assert!(sample(1e-12, 1e-10).pass);
        assert!(sample(0.0, 0.0).pass);
        assert!(!sample(2e-10, 1e-10).pass);
        let bad = sample(f64::NAN, 1.0);
        assert!(!bad.pass && bad.max_residual.is_none());
        assert!(!sample(f64::INFINITY, 1.0).pass);
    }

    #[test]
    fn json_round_trips_and_markdown_has_a_row_per_report() {
        let rs = vec![sample(1e-12, 1e-10), sample(1.0, 1e-3)];
        let json = emit_json(&rs);
        let back: Vec<VerificationReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rs);
        assert_eq!(json, emit_json(&back));
        let md = emit_markdown(&rs);
        assert_eq!(md.lines().count(), 4);
        assert!(md.contains("FAIL"));
        assert!(!all_pass(&rs));
    }
}
