use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

fn efl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efl"))
        .args(args)
        .output()
        .expect("efl runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const OMEGA: &str =
    "(sig nondet) (def omega (or (ref omega) (ref omega))) (main cpt N (ref omega))";
const DIVERGE: &str = "(def d (sk (ref d))) (main cpt N (ref d))";

#[test]
fn omega_must_diverge() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "omega.efl", OMEGA);
    let o = efl(&[
        "check",
        "--effect",
        "nondet",
        "--program",
        p.to_str().unwrap(),
        "--formula",
        "(obs-beta may (test false))",
        "--fuel",
        "64",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("RESULT: PROVED"));
}

#[test]
fn diverge_with_and_without_cycle_rule() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "d.efl", DIVERGE);
    let base = [
        "check",
        "--effect",
        "pure",
        "--program",
        p.to_str().unwrap(),
        "--formula",
        "(obs-alpha term (test true))",
    ];
    let o = efl(&base);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("RESULT: REFUTED"));
    let mut fuel_only = base.to_vec();
    fuel_only.push("--no-cycle-rule");
    let o = efl(&fuel_only);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("RESULT: UNKNOWN"));
}

#[test]
fn decompose_verify_store() {
    let args = [
        "decompose-verify",
        "--effect",
        "store",
        "--samples",
        "500",
        "--depth",
        "4",
        "--seed",
        "42",
    ];
    let o = efl(&args);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("PASS 500/500"), "{out}");
    assert!(out.ends_with("RESULT: PROVED\n"));
    assert_eq!(stdout(&efl(&args)), out, "reports are deterministic");
}

#[test]
fn lift_reports_both_modes() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "t.efl", "(sig timed) (main cpt N (sk (sk (leaf 7))))");
    let p = p.to_str().unwrap();
    let run = |obs: &str, mode: &str, pred: &str| {
        efl(&[
            "lift",
            "--program",
            p,
            "--obs",
            obs,
            "--mode",
            mode,
            "--pred",
            pred,
        ])
        .status
        .code()
    };
    assert_eq!(run("(tl 2)", "alpha", "any"), Some(0));
    assert_eq!(run("(tl 1)", "alpha", "any"), Some(1));
    assert_eq!(run("(tl 2)", "alpha", "(3 4)"), Some(1));
    assert_eq!(run("(tl 1)", "beta", "none"), Some(0));
}

#[test]
fn trace_lists_obligations() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "s.efl",
        "(sig store) (main cpt N (lookup n (seq (update (+ n 1)) (leaf n))))",
    );
    let o = efl(&[
        "check",
        "--program",
        p.to_str().unwrap(),
        "--formula",
        "(obs-alpha (st 0 1) (eq 0))",
        "--trace",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.lines()
            .any(|l| l.starts_with("trace: ") && l.contains("lookup")),
        "{out}"
    );
}

#[test]
fn gamma_problem_file() {
    let dir = TempDir::new().unwrap();
    let header = "(sig nondet) (def omega (or (ref omega) (ref omega))) (carrier 0 1)";
    let pass = write(
        &dir,
        "pass.gamma",
        &format!("{header} (relation (0 1)) (left (or (leaf 0) (ref omega))) (right (or (ref omega) (leaf 1)))"),
    );
    let o = efl(&["gamma", "--problem", pass.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let fail = write(
        &dir,
        "fail.gamma",
        &format!("{header} (left (or (leaf 0) (ref omega))) (right (or (leaf 0) (leaf 0)))"),
    );
    let o = efl(&["gamma", "--problem", fail.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("counterexample"));
}

const CASE_STUDY: &str = "(sig nondet)
(def omega (or (ref omega) (ref omega)))
(layer cpt (U (U N))
  (terms (or (leaf (thunk (ref omega))) (leaf (thunk (leaf (thunk (ref omega))))))
         (leaf (thunk (or (ref omega) (leaf (thunk (ref omega))))))))
(layer val (U (U N))
  (terms (thunk (ref omega)) (thunk (leaf (thunk (ref omega))))
         (thunk (or (ref omega) (leaf (thunk (ref omega)))))))
(layer cpt (U N) (terms (ref omega) (leaf (thunk (ref omega))) (or (ref omega) (leaf (thunk (ref omega))))))
(layer val (U N) (terms (thunk (ref omega))))
(layer cpt N (terms (ref omega)))
(layer val N (terms))
";

#[test]
fn simulate_case_study() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "case.sim",
        &format!("{CASE_STUDY} (query 0 0 1) (query 0 1 0)"),
    );
    let o = efl(&["simulate", "--problem", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("query (0 0 1): not similar"), "{out}");
    assert!(out.contains("query (0 1 0): not similar"), "{out}");

    let p = write(&dir, "refl.sim", &format!("{CASE_STUDY} (query 0 0 0)"));
    assert_eq!(
        efl(&["simulate", "--problem", p.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );

    let cand = CASE_STUDY.replacen(
        "(leaf (thunk (or (ref omega) (leaf (thunk (ref omega))))))))",
        "(leaf (thunk (or (ref omega) (leaf (thunk (ref omega)))))))\n  (relation (1 0)))",
        1,
    );
    let p = write(&dir, "cand.sim", &cand);
    let o = efl(&["simulate", "--problem", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("violation"));
}

#[test]
fn usage_and_parse_errors_exit_3() {
    assert_eq!(efl(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(efl(&["check", "--program", "x.efl"]).status.code(), Some(3));
    assert_eq!(
        efl(&["decompose-verify", "--effect", "quantum"])
            .status
            .code(),
        Some(3)
    );
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.efl");
    let o = efl(&[
        "check",
        "--program",
        missing.to_str().unwrap(),
        "--formula",
        "(test true)",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let bad = write(&dir, "bad.efl", "(sig nondet)\n(main cpt N (or (leaf 0))");
    let o = efl(&[
        "check",
        "--program",
        bad.to_str().unwrap(),
        "--formula",
        "(test true)",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:"));
    let p = write(&dir, "omega.efl", OMEGA);
    let o = efl(&[
        "check",
        "--program",
        p.to_str().unwrap(),
        "--formula",
        "(eq 3)",
    ]);
    assert_eq!(o.status.code(), Some(3), "formula at the wrong sort");
    assert!(efl(&["--help"]).status.success());
}
