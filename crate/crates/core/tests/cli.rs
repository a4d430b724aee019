use std::path::PathBuf;

use ncpos::cli::{run, EXIT_BUDGET, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(std::iter::once("ncpos").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ncpos-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn normalize_kernel_word() {
    let (code, out) = call(&["normalize", "J x[0,0] z[0,0] z[0,0]~ z[0,0]", "--builtin", "ks"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(out.lines().next(), Some("J x[0,0] z[0,0]"));
    let (code, out) = call(&["normalize", "", "--builtin", "ks"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(out.lines().next(), Some("1"));
}

#[test]
fn malformed_word_points_at_token() {
    let (code, out) = call(&["normalize", "J x[0 z[0,0]", "--builtin", "ks"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.contains('^'), "{out}");
}

#[test]
fn unknown_arguments_are_usage_errors() {
    assert_eq!(call(&["selftest", "nosuchsuite"]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["pipeline", "--m", "1", "--tm", "builtin:bogus"]).0, EXIT_USAGE);
}

#[test]
fn pipeline_on_halting_machine_reports_trace() {
    let (code, out) = call(&["pipeline", "--m", "1", "--tm", "builtin:halting-after-1"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("tau(PQ) = 1/8"), "{out}");
}

#[test]
fn pipeline_without_halting_is_reproducible() {
    let args = ["pipeline", "--m", "1", "--horizon", "4"];
    let (code, first) = call(&args);
    assert_eq!(code, EXIT_OK, "{first}");
    assert_eq!(first.lines().filter(|l| l.contains("verified")).count(), 4, "{first}");
    assert_eq!(call(&args).1, first);
}

#[test]
fn pipeline_budget_exhaustion() {
    let (code, out) = call(&["pipeline", "--m", "1", "--horizon", "4", "--budget", "3"]);
    assert_eq!(code, EXIT_BUDGET, "{out}");
    assert!(out.contains("BUDGET EXHAUSTED"), "{out}");
}

#[test]
fn eval_halting_needs_a_halting_machine() {
    assert_eq!(call(&["eval-halting", "--m", "1", "--budget", "50"]).0, EXIT_BUDGET);
}

#[test]
fn decomposition_files_round_trip() {
    let path = scratch("key.txt");
    let p = path.to_str().unwrap();
    let (code, out) = call(&["decompose-key", "--m", "2", "--n", "1", "--out", p]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out) = call(&["verify-decomp", p]);
    assert_eq!(code, EXIT_OK, "{out}");

    // drop the last entry
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    let tampered = scratch("key-tampered.txt");
    std::fs::write(&tampered, lines.join("\n")).unwrap();
    let (code, out) = call(&["verify-decomp", tampered.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAILURE, "{out}");
}

#[test]
fn sos_on_a_square() {
    let path = scratch("poly.txt");
    std::fs::write(&path, "2 : 1\n1 : x\n1 : x~\n").unwrap();
    let p = path.to_str().unwrap();
    // x and x* are unrelated in the free algebra, so every square brings an x* x term
    let (code, out) = call(&["sos", p, "--degree", "1"]);
    assert_eq!(code, EXIT_FAILURE, "{out}");
    let (code, out) = call(&["sos", p, "--degree", "1", "--quotient", "involutive"]);
    assert_eq!(code, EXIT_OK, "{out}");
}

#[test]
fn selftest_single_suite() {
    let (code, out) = call(&["selftest", "inequalities", "--seed", "3"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.lines().any(|l| l.starts_with("PASS")), "{out}");
    assert!(!out.lines().any(|l| l.starts_with("FAIL")), "{out}");
}
