use std::process::{Command, Output};

fn qgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgeom")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qgeom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn classify_examples() {
    let o = qgeom(&["classify", "1,0", "0,0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "pontecorvo_domain");
    assert_eq!(stdout(&qgeom(&["classify", "0,0", "1,0"])).trim(), "opposite_domain");
    assert_eq!(stdout(&qgeom(&["classify", "1,0", "0,1"])).trim(), "on_zero_set");
    assert_eq!(stdout(&qgeom(&["classify", "1,1", "1,1"])).trim(), "generic");
    let j = qgeom(&["classify", "1+1i,0", "0,0", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert_eq!(v["label"], "pontecorvo_domain");
}

#[test]
fn classify_rejects_bad_input() {
    assert_eq!(qgeom(&["classify", "1,x", "0,0"]).status.code(), Some(2));
    assert_eq!(qgeom(&["classify", "1,0", "0"]).status.code(), Some(2));
    assert_eq!(qgeom(&["classify", "0,0", "0,0"]).status.code(), Some(2));
}

#[test]
fn verify_emits_json_and_passes() {
    let o = qgeom(&["verify", "algebra", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let arr = v.as_array().unwrap();
    assert!(!arr.is_empty());
    assert!(arr.iter().all(|r| r["pass"] == true && r["seed"] == 42 && r["millis"] == 0));
}

#[test]
fn verify_markdown_and_out_file() {
    let path = scratch("report.md");
    let o = qgeom(&["verify", "twistor", "--samples", "3", "--report", "md", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("| check |"));
    assert!(text.contains("twistor/equation"));
}

#[test]
fn failing_checks_exit_with_one() {
    let o = qgeom(&["verify", "swann", "--samples", "3", "--theta", "reversed"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(qgeom(&["verify", "bogus"]).status.code(), Some(2));
    assert_eq!(qgeom(&["verify", "algebra", "--n", "0"]).status.code(), Some(2));
    assert_eq!(qgeom(&["verify", "algebra", "--engine", "magic"]).status.code(), Some(2));
    assert_eq!(qgeom(&[]).status.code(), Some(2));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let path = scratch("run.toml");
    std::fs::write(&path, "n = 2\nseed = 7\nsamples = 3\nengine = \"fd\"\n").unwrap();
    let o = qgeom(&["verify", "connection", "--config", path.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["seed"] == 9 && r["samples"] == 3));

    let bad = scratch("bad.toml");
    std::fs::write(&bad, "n = 2\nunknown_key = 1\n").unwrap();
    assert_eq!(qgeom(&["verify", "algebra", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qgeom(&["verify", "algebra", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let run = |val: &str| {
        Command::new(env!("CARGO_BIN_EXE_qgeom"))
            .env("QGEOM_THREADS", val)
            .args(["verify", "algebra", "--samples", "2"])
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("1"), Some(0));
    assert_eq!(run("0"), Some(2));
    assert_eq!(run("many"), Some(2));
}

#[test]
fn chern_command_reports_the_pairings() {
    let o = qgeom(&["chern", "--n", "1", "--grid", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["c1_f"]["value"].as_f64().unwrap() - 2.0).abs() < 0.02);
    assert!((v["c1_m"]["value"].as_f64().unwrap() - 2.0).abs() < 0.02);
    assert!(v["defect"].as_f64().unwrap() < 0.01);
}

#[test]
fn verify_is_byte_deterministic() {
    let a = qgeom(&["verify", "grassmann", "--samples", "5"]);
    let b = qgeom(&["verify", "grassmann", "--samples", "5"]);
    assert_eq!(a.stdout, b.stdout);
}
