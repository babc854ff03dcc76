use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn linsmr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linsmr"))
        .args(args)
        .current_dir(dir)
        .env_remove("LINSMR_BUDGET_NODES")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn run_then_check_listing1() {
    let dir = tempfile::tempdir().unwrap();
    let o = linsmr(&["run", "listing1", "--seed", "0", "--out", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/listing1.sim.json").exists());
    let trace = "out/listing1.trace";
    let lin = linsmr(&["check", trace, "--level", "lin", "--spec", "lock-object"], dir.path());
    assert_eq!(code(&lin), 1);
    let interval = linsmr(&["check", trace, "--level", "interval", "--spec", "lock-object"], dir.path());
    assert_eq!(code(&interval), 0);
    let mp = linsmr(
        &["check", trace, "--level", "mp", "--spec", "lock-object", "--verdicts", "v.jsonl"],
        dir.path(),
    );
    assert_eq!(code(&mp), 0);
    let r = linsmr(&["render", trace, "--show", "points", "--witness", "v.jsonl"], dir.path());
    assert_eq!(code(&r), 0);
    assert_eq!(String::from_utf8_lossy(&r.stdout).matches('*').count(), 3);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        assert_eq!(code(&linsmr(&["run", "listing1", "--seed", "7", "--out", out], dir.path())), 0);
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/listing1.trace"), read("b/listing1.trace"));
    assert_eq!(read("a/listing1.sim.json"), read("b/listing1.sim.json"));
}

#[test]
fn quorum_without_repair_is_stale() {
    let dir = tempfile::tempdir().unwrap();
    let o = linsmr(&["run", "quorum", "--no-read-repair", "--out", "."], dir.path());
    assert_eq!(code(&o), 0);
    let c = linsmr(&["check", "quorum.trace", "--level", "lin", "--spec", "register"], dir.path());
    assert_eq!(code(&c), 1);
}

#[test]
fn unknown_scenario_and_bad_trace_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = linsmr(&["run", "no-such-scenario"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());

    linsmr(&["run", "listing1", "--out", "."], dir.path());
    let text = fs::read_to_string(dir.path().join("listing1.trace")).unwrap();
    fs::write(dir.path().join("cut.trace"), &text[..text.len() / 2]).unwrap();
    let c = linsmr(&["check", "cut.trace", "--spec", "lock-object"], dir.path());
    assert_eq!(code(&c), 2);
}

#[test]
fn exhausted_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    linsmr(&["run", "listing1", "--out", "."], dir.path());
    let c = Command::new(env!("CARGO_BIN_EXE_linsmr"))
        .args(["check", "listing1.trace", "--level", "lin", "--spec", "lock-object"])
        .current_dir(dir.path())
        .env("LINSMR_BUDGET_NODES", "1")
        .output()
        .unwrap();
    assert_eq!(code(&c), 3);
}

#[test]
fn empty_trace_renders_nothing() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.trace"), "").unwrap();
    let r = linsmr(&["render", "empty.trace"], dir.path());
    assert_eq!(code(&r), 0);
    assert!(r.stdout.is_empty());
}

#[test]
fn svg_render_to_file() {
    let dir = tempfile::tempdir().unwrap();
    linsmr(&["run", "listing1", "--out", "."], dir.path());
    let r = linsmr(
        &["render", "listing1.trace", "--style", "svg", "--show", "intervals", "--compute", "interval", "--spec", "lock-object", "--out", "l.svg"],
        dir.path(),
    );
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(fs::read_to_string(dir.path().join("l.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn suite_mutant_fails_with_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let ok = linsmr(&["suite", "lemmas", "--trials", "50"], dir.path());
    assert_eq!(code(&ok), 0);
    let bad = linsmr(&["suite", "oracle", "--trials", "50", "--mutant"], dir.path());
    assert_eq!(code(&bad), 1);
    let out = String::from_utf8_lossy(&bad.stdout);
    assert!(out.contains("counterexample"));
    assert!(out.contains("\"kind\":\"invocation\""));
}
