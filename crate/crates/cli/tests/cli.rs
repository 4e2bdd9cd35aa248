//! End-to-end behavior of the `nbhd` binary: exit codes, diagnostics,
//! report determinism and round-tripping.

use std::process::Command;

fn nbhd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nbhd"))
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn pass_exits_zero() {
    let out = nbhd()
        .args(["resolve-check", &fixture("point-in-plane.scn")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("status = pass"));
}

#[test]
fn check_failure_exits_one() {
    let out = nbhd()
        .args(["resolve-check", &fixture("nonregular.scn")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("status = fail"));
    assert!(text.contains("H^-1"), "diagnostic must locate the failure:\n{text}");
}

#[test]
fn malformed_scenario_exits_two_with_location() {
    let dir = std::env::temp_dir().join("nbhd-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.scn");
    std::fs::write(&bad, "[embedding]\nthis is not a declaration\n").unwrap();
    let out = nbhd()
        .args(["resolve-check", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "stderr: {err}");
}

#[test]
fn missing_file_exits_two() {
    let out = nbhd().args(["tor", "no-such-file.scn"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_cocycle_fails_with_located_generator() {
    let out = nbhd()
        .args(["obstruct", &fixture("corrupted-cocycle.scn")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rejected"), "{text}");
    assert!(text.contains("n"), "diagnostic names the offending generator: {text}");
}

#[test]
fn report_bodies_are_deterministic_and_round_trip() {
    let run = || {
        let out = nbhd()
            .args(["ce-check", &fixture("point-in-line.scn"), "--k", "1", "--wmax", "3"])
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run();
    let b = run();
    let strip_timing = |s: &str| -> String {
        s.lines().filter(|l| !l.starts_with("timing_ms")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip_timing(&a), strip_timing(&b), "report body must be byte-identical");
    let parsed = nbhd_cli::report::Report::parse(&a).unwrap();
    assert_eq!(parsed.print(), a);
}

#[test]
fn report_flag_writes_file() {
    let dir = std::env::temp_dir().join("nbhd-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.report");
    let out = nbhd()
        .args([
            "tor",
            &fixture("point-in-line.scn"),
            "--report",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, String::from_utf8(out.stdout).unwrap());
}

#[test]
fn order_above_fixture_data_is_a_usage_error() {
    let out = nbhd()
        .args(["obstruct", &fixture("conic-in-p2.scn"), "--order", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jobs_flag_is_accepted() {
    let out = nbhd()
        .args(["tw-check", &fixture("tw-battery.scn"), "--jobs", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
