//! Command-line behaviour: exit codes, reports and determinism.

use std::process::Command;

use omegah::cli::{run, EXIT_DIVERGENCE, EXIT_FAIL, EXIT_PASS, EXIT_USAGE, REPORT_SCHEMA};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["omegah".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn list_shows_every_model() {
    let (code, out, _) = invoke(&["list", "--json"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 7);
}

#[test]
fn verify_passes_and_reports_json() {
    let (code, out, _) = invoke(&["verify", "cyl-case2", "--samples", "10", "--seed", "4", "--json"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], REPORT_SCHEMA);
    assert_eq!(v["environment"]["seed"], 4);
    assert_eq!(v["pass"], true);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["samples"] == 10 && c["pass"] == true));
}

#[test]
fn reports_are_deterministic() {
    let args = ["verify", "undulator", "--samples", "12", "--seed", "99", "--json"];
    let (_, a, _) = invoke(&args);
    let (_, b, _) = invoke(&args);
    assert_eq!(a, b);
    let (_, c, _) = invoke(&["verify", "undulator", "--samples", "12", "--seed", "100", "--json"]);
    assert_ne!(a, c);
}

#[test]
fn tightened_tolerance_fails() {
    let (code, out, _) = invoke(&["verify", "constant-b", "--samples", "5", "--tol.chain", "1e-30"]);
    assert_eq!(code, EXIT_FAIL);
    assert!(out.contains("FAIL chain"));
}

#[test]
fn violated_constraint_fails() {
    let (code, out, _) = invoke(&["verify", "family-a", "--samples", "5", "--fn", "mu2=-1-y^2"]);
    assert_eq!(code, EXIT_FAIL);
    assert!(out.contains("constraint violated: mu2 > 0"));
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        vec!["verify", "undulator", "--bogus"],
        vec!["verify", "no-such-model"],
        vec!["verify", "undulator", "--tol.unknown", "1e-3"],
        vec!["verify", "undulator", "--gauge", "landau-x"],
        vec!["verify", "cyl-case1", "--fn", "Aphi=r +"],
        vec!["simulate", "undulator", "--x0", "1,2"],
    ] {
        assert_eq!(invoke(&args).0, EXIT_USAGE, "{args:?}");
    }
}

#[test]
fn newton_failure_exits_2() {
    let (code, _, err) = invoke(&["simulate", "undulator", "--dt", "0.5", "--t-final", "5", "--max-newton-iters", "1"]);
    assert_eq!(code, EXIT_DIVERGENCE);
    assert!(err.contains("Newton"));
}

#[test]
fn simulate_writes_csv() {
    let dir = std::env::temp_dir().join(format!("omegah-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("traj.csv");
    let (code, _, _) = invoke(&[
        "simulate",
        "constant-b",
        "--t-final",
        "1",
        "--x0",
        "0.5,0.2,0.1,0.3,-0.4,0.6",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PASS);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,q1,q2,q3,p1,p2,p3,H,H1,H2,H3,H4,H5");
    assert_eq!(lines.count(), 1001);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_omegah");
    let ok = Command::new(bin).args(["verify", "cyl-case3", "--samples", "5"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_PASS));
    let bad = Command::new(bin).args(["verify", "--samples"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
