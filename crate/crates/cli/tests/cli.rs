use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_sandwich");

fn fixture(name: &str) -> String {
    format!("{}/../core/tests/fixtures/{name}.scene", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn records(args: &[&str]) -> String {
    let mut all = vec!["--format", "records"];
    all.extend_from_slice(args);
    let out = run(&all);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn has(out: &str, line: &str) -> bool {
    out.lines().any(|l| l == line)
}

#[test]
fn cartier_curve_in_four_factor_scene() {
    let f = fixture("four_factors");
    let out = records(&["cartier", &f, "--curve", "C"]);
    assert!(has(&out, "cartier=true"), "{out}");
    assert!(has(&out, "a=1,2,1,2"), "{out}");
    let out = records(&["intersect", &f, "--a", "C", "--b", "C"]);
    assert!(has(&out, "noether=191") && has(&out, "on_x=10"), "{out}");
}

#[test]
fn surface_and_semigroup_of_the_satellite_scene() {
    let f = fixture("satellite_321_branch");
    let out = records(&["surface", &f]);
    assert!(has(&out, "sing.Q.multiplicity=3"), "{out}");
    assert!(has(&out, "kplus=p1,p2"), "{out}");
    let out = records(&["semigroup", &f, "--branch", "delta"]);
    assert!(has(&out, "conductor=0"), "{out}");
    let out = records(&["local", &f, "--curve", "delta", "--sing", "O"]);
    assert!(has(&out, "principal=false"), "{out}");
    let out = records(&["flag", &f, "--curve", "delta", "--excess", "p1=5,p2=7"]);
    assert!(has(&out, "omega=0,1") && has(&out, "n=2"), "{out}");
}

#[test]
fn unload_and_factorize() {
    let out = records(&["unload", &fixture("free_pair_12")]);
    assert!(has(&out, "output.nu=2,1"), "{out}");
    let out = records(&["factorize", &fixture("satellite_321")]);
    assert!(has(&out, "factor.p1=1") && has(&out, "factor.p2=1"), "{out}");
}

#[test]
fn reads_the_scene_from_stdin() {
    let text = std::fs::read_to_string(fixture("free_pair_21")).unwrap();
    let mut child = Command::new(BIN)
        .args(["--format", "records", "validate", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = String::from_utf8(out.stdout).unwrap();
    assert!(has(&out, "points=2"), "{out}");
    assert_eq!(out, records(&["validate", &fixture("free_pair_21")]));
}

#[test]
fn output_is_deterministic() {
    let f = fixture("four_factors");
    assert_eq!(records(&["report", &f]), records(&["report", &f]));
    let text = run(&["report", &f]);
    assert_eq!(text.status.code(), Some(0));
    assert_eq!(text.stdout, run(&["report", &f]).stdout);
}

#[test]
fn input_errors_exit_with_one() {
    let out = run(&["validate", "/nonexistent/scene"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = run(&["cartier", &fixture("free_pair_21"), "--curve", "missing"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn selfcheck_runs_green() {
    let out = records(&["selfcheck", "--seeds", "5"]);
    assert!(out.lines().any(|l| l.ends_with(".failed=0")), "{out}");
    assert!(!out.lines().any(|l| l.contains(".failed=") && !l.ends_with("=0")), "{out}");
}
