use std::path::Path;
use std::process::{Command, Output};

use grouptop::filters::{VERDICT_CONSISTENT, VERDICT_GAP};
use grouptop::report::{RunMetadata, Status, VerificationReport};

fn grouptop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grouptop"))
        .args(args)
        .env_remove("GROUPTOP_FIXTURES")
        .output()
        .expect("binary runs")
}

fn read_report(path: &Path) -> VerificationReport {
    VerificationReport::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_sqrt7_writes_report_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sqrt7.json");
    let o = grouptop(&[
        "verify",
        "sqrt7",
        "--gmax",
        "50",
        "--nmax",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = read_report(&out);
    assert_eq!(report.schema, 1);
    assert_eq!(report.count(Status::Verified), 250);
    let meta: RunMetadata = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("sqrt7.json.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(
        meta.command[1..3],
        ["verify".to_string(), "sqrt7".to_string()]
    );

    let again = dir.path().join("again.json");
    grouptop(&[
        "verify",
        "sqrt7",
        "--gmax",
        "50",
        "--nmax",
        "5",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());

    let o = grouptop(&["recheck", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn recheck_rejects_tampered_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("interval.json");
    grouptop(&["verify", "interval", "--out", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out)
        .unwrap()
        .replacen("\"7/8\"", "\"3/8\"", 1);
    std::fs::write(&out, text).unwrap();
    let o = grouptop(&["recheck", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAILED"));
}

#[test]
fn verify_exit_codes() {
    assert_eq!(
        grouptop(&["verify", "fibonacci", "--n", "20"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(grouptop(&["verify", "interval"]).status.code(), Some(0));
    assert_eq!(grouptop(&["verify", "product"]).status.code(), Some(0));
    let o = grouptop(&["verify", "sqrt7", "--gmax", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(
        grouptop(&["verify", "sqrt7", "--nmax", "x"]).status.code(),
        Some(1)
    );
}

#[test]
fn hausdorff_configs() {
    let o = grouptop(&["hausdorff", "sqrt7.json", "--format", "json"]);
    let r = VerificationReport::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(r.verdict.as_deref(), Some(VERDICT_GAP));
    assert_eq!(o.status.code(), Some(2));

    let o = grouptop(&["hausdorff", "powers3.json", "--format", "json"]);
    let r = VerificationReport::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(r.verdict.as_deref(), Some(VERDICT_CONSISTENT));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn hausdorff_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("identity.json");
    std::fs::write(
        &id,
        r#"{"family": {"kind": "chain", "generator": "sqrt7"}, "probes": [0, 1]}"#,
    )
    .unwrap();
    assert_eq!(
        grouptop(&["hausdorff", id.to_str().unwrap()]).status.code(),
        Some(1)
    );

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\n  \"family\": {\"kind\": \"chain\"},\n  \"probes\": [1]\n}",
    )
    .unwrap();
    let o = grouptop(&["hausdorff", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line "));
}

#[test]
fn fixture_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("tiny.json"),
        r#"{"family": {"kind": "cofinite", "sequence": "powers2"}, "probes": [1], "budget": {"max_len": 2}}"#,
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_grouptop"))
        .args(["hausdorff", "tiny.json"])
        .env("GROUPTOP_FIXTURES", dir.path())
        .output()
        .unwrap();
    assert_ne!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn hensel_command() {
    let o = grouptop(&[
        "hensel", "--p", "3", "--a", "7", "--k", "3", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let roots: Vec<String> = v["chain"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["root"].to_string())
        .collect();
    assert_eq!(roots, ["1", "4", "13"]);
    assert_eq!(
        grouptop(&["hensel", "--p", "3", "--a", "2", "--k", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(grouptop(&["hensel", "--k", "0"]).status.code(), Some(1));
}
