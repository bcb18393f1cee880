//! End-to-end tests of the `jmt` binary: exit codes, output shapes, and
//! flag handling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn jmt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jmt"))
}

fn jls04() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models/jls04.cat")
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, content).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn jmt")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const LBODD: &str = "\
Java LbOdd
{ x=0; y=0; }
a := x.pln;
b := a | 1;
y.pln := b;
|||
c := y.pln;
x.pln := c;
exists (a = 1 /\\ b = 1 /\\ c = 1)
";

#[test]
fn check_pass_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let out = run(jmt().arg("check").arg(&litmus).arg(jls04()));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("LbOdd: pass"), "{}", stdout(&out));
}

#[test]
fn check_fail_exits_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(
        dir.path(),
        "coh.litmus",
        "Java Coh\n{ x=0; }\nx.pln := 1;\n|||\na := x.pln;\n~exists (a = 1)\n",
    );
    let out = run(jmt().arg("check").arg(&litmus).arg(jls04()));
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(stdout(&out).contains("a=1"), "{}", stdout(&out));
}

#[test]
fn check_json_reports_outcome_and_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let out = run(jmt().arg("check").arg(&litmus).arg(jls04()).arg("--json"));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["test"], "LbOdd");
    assert_eq!(v["outcome"], "pass");
    assert_eq!(v["evidence"]["values"]["a"], 1);
}

#[test]
fn show_justification_prints_stages() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let out =
        run(jmt().arg("check").arg(&litmus).arg(jls04()).arg("--show-justification"));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("stage 1: committed {Wini(x), Wini(y)}"), "{text}");
    assert!(text.contains("target:"), "{text}");
}

#[test]
fn smt_dump_writes_smtlib() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let dump = dir.path().join("query.smt2");
    let out = run(jmt()
        .arg("check")
        .arg(&litmus)
        .arg(jls04())
        .arg("--smt-dump")
        .arg(&dump));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("(set-logic QF_BV)"), "{text}");
    assert!(text.contains("check-sat"), "{text}");
}

#[test]
fn missing_file_is_a_usage_error() {
    let out = run(jmt().arg("check").arg("no-such-file.litmus").arg(jls04()));
    assert_eq!(out.status.code(), Some(64), "{out:?}");
}

#[test]
fn syntax_error_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "bad.litmus", "Java Bad\nthis is not a program\n");
    let out = run(jmt().arg("check").arg(&litmus).arg(jls04()));
    assert_eq!(out.status.code(), Some(64), "{out:?}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(jmt().arg("check").arg("--frobnicate"));
    assert_eq!(out.status.code(), Some(64), "{out:?}");
}

#[test]
fn exhausted_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let out = run(jmt().arg("check").arg(&litmus).arg(jls04()).arg("--node-budget").arg("0"));
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn to_herd_x86_writes_the_compiled_program() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let out_path = dir.path().join("lbodd.x86.litmus");
    let out = run(jmt().arg("to-herd-x86").arg(&litmus).arg("--output").arg(&out_path));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("X86 LbOdd\n"), "{text}");
    assert!(text.contains("MOV EAX,[x]"), "{text}");
}

#[test]
fn to_herd_x86_rejects_branches_as_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(
        dir.path(),
        "branch.litmus",
        "Java Branch\n{ x=0; }\na := x.pln;\nif (a = 1) { x.pln := 2 } else { skip };\nexists (a = 0)\n",
    );
    let out = run(jmt().arg("to-herd-x86").arg(&litmus));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn to_jcstress_without_model_marks_outcomes_interesting() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let out = run(jmt().arg("to-jcstress").arg(&litmus));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("ACCEPTABLE_INTERESTING"), "{text}");
    assert!(text.contains("@Actor"), "{text}");
}

#[test]
fn to_jcstress_with_model_classifies_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let out = run(jmt().arg("to-jcstress").arg(&litmus).arg("--model").arg(jls04()));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    // b = a | 1 is always odd, and a = b = c = 1 is the LbOdd behavior
    assert!(text.contains(r#"id = "1, 1, 1", expect = ACCEPTABLE"#), "{text}");
    assert!(text.contains(r#"id = "0, 1, 0", expect = ACCEPTABLE"#), "{text}");
    assert!(!text.contains("expect = ACCEPTABLE_INTERESTING"), "{text}");
}

#[test]
fn with_herd_x86_uses_the_herd_path_flag() {
    // a stub herd that reports the only SC behavior of a one-thread program
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(
        dir.path(),
        "one.litmus",
        "Java One\n{ x=0; }\nx.pln := 1;\na := x.pln;\nexists (a = 1)\n",
    );
    let stub = write(
        dir.path(),
        "herd-stub.sh",
        "#!/bin/sh\nprintf 'Test One\\nStates 1\\n0:EAX=1;\\nOk\\n'\n",
    );
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&stub, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    let out = run(jmt()
        .arg("with-herd-x86")
        .arg(&litmus)
        .arg(jls04())
        .arg("--herd-path")
        .arg(&stub));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("pass"), "{}", stdout(&out));
}

#[test]
fn with_herd_x86_missing_herd_is_an_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    let litmus = write(dir.path(), "lbodd.litmus", LBODD);
    let out = run(jmt()
        .arg("with-herd-x86")
        .arg(&litmus)
        .arg(jls04())
        .arg("--herd-path")
        .arg("/no/such/herd"));
    assert_eq!(out.status.code(), Some(70), "{out:?}");
}
