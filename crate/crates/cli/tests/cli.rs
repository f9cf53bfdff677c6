use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn lrsx(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrsx"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("LRSX_ATP_PATH")
        .env_remove("LRSX_ATP_CMD")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn join_writes_named_diagram_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrsx(dir.path(), &["join", fixture("simple.inp").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let forking = std::fs::read_to_string(dir.path().join("forking_diagrams")).unwrap();
    assert_eq!(forking.lines().count(), 5);
    assert!(forking.contains("<-SR,top- . -top-> ~~>\n"));
    let commuting = std::fs::read_to_string(dir.path().join("commuting_diagrams")).unwrap();
    assert_eq!(commuting.lines().count(), 8);
    let m = manifest(dir.path());
    assert_eq!(m["command"], "join");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn join_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let input = fixture("simple.inp");
    lrsx(a.path(), &["join", input.to_str().unwrap()]);
    lrsx(b.path(), &["join", input.to_str().unwrap()]);
    for f in ["forking_diagrams", "commuting_diagrams"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn join_without_commands() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("simple.inp")).unwrap();
    let stripped: String = text.lines().filter(|l| !l.starts_with('"')).map(|l| format!("{l}\n")).collect();
    let input = dir.path().join("nocmd.inp");
    std::fs::write(&input, stripped).unwrap();
    let o = lrsx(dir.path(), &["join", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(manifest(dir.path())["outputs"].as_array().unwrap().is_empty());
}

#[test]
fn missing_class_table_names_the_classes() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("simple.inp")).unwrap();
    let stripped: String = text.lines().filter(|l| !l.contains("declare ")).map(|l| format!("{l}\n")).collect();
    let input = dir.path().join("nofork.inp");
    std::fs::write(&input, stripped).unwrap();
    let o = lrsx(dir.path(), &["join", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("(A, C)") || err.contains("(C, C)") || err.contains("(C, A)"), "{err}");
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.inp");
    std::fs::write(&input, "{SR,x} A[ ==>\n").unwrap();
    assert_eq!(lrsx(dir.path(), &["check", input.to_str().unwrap()]).status.code(), Some(2));
    let diag = dir.path().join("bad_diagrams");
    std::fs::write(&diag, "<-SR,a- . -T-> ~~> -T-> .\n").unwrap();
    assert_eq!(lrsx(dir.path(), &["induct", diag.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.inp");
    assert_eq!(lrsx(dir.path(), &["check", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn check_and_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("simple.inp");
    assert_eq!(lrsx(dir.path(), &["check", input.to_str().unwrap()]).status.code(), Some(0));
    let o = lrsx(dir.path(), &["overlap", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("forking_diagrams: 7 overlaps"), "{}", stdout(&o));
}

#[test]
fn induct_simple_is_proved() {
    let dir = tempfile::tempdir().unwrap();
    lrsx(dir.path(), &["join", fixture("simple.inp").to_str().unwrap()]);
    for f in ["forking_diagrams", "commuting_diagrams"] {
        let o = lrsx(dir.path(), &["induct", dir.path().join(f).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).ends_with("Proved\n"));
        assert!(dir.path().join(format!("{f}.trs")).exists());
        assert!(dir.path().join(format!("{f}.rules")).exists());
    }
}

#[test]
fn induct_cpt_reports_a_loop() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrsx(dir.path(), &["induct", fixture("cpt.trs").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(!s.contains("\nProved"));
    assert!(s.contains("loop"), "{s}");
}

#[test]
fn emit_only_skips_proving() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrsx(dir.path(), &["induct", "--emit-only", fixture("cpt.trs").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let tpdb = std::fs::read_to_string(dir.path().join("cpt.trs")).unwrap();
    assert!(tpdb.contains("(STRATEGY INNERMOST)"));
    assert!(!stdout(&o).contains("Disproved"));
}

#[cfg(unix)]
#[test]
fn external_prover_from_environment() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("yes.sh");
    std::fs::write(&script, "#!/bin/sh\ntest -f \"$1\" && echo YES\n").unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lrsx"))
        .arg("--out")
        .arg(dir.path())
        .args(["induct", fixture("cpt.trs").to_str().unwrap(), "--atp-cmd", "/nonexistent {file}"])
        .env("LRSX_ATP_CMD", format!("{} {{file}}", script.display()))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).ends_with("Proved\n"));
}

#[test]
fn atp_path_alias_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrsx(dir.path(), &["induct", "atp-path=/nonexistent/", fixture("cpt.trs").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(dir.path());
    assert!(m["args"].as_array().unwrap().iter().any(|a| a == "--atp-path=/nonexistent/"));
    assert!(m["config"].as_str().unwrap().contains("/nonexistent/"));
}

#[test]
fn oracle_full_and_vacuous() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("simple.inp");
    let o = lrsx(dir.path(), &["oracle", input.to_str().unwrap(), "--size", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("(100.0%)"));
    let o = lrsx(dir.path(), &["oracle", input.to_str().unwrap(), "--size", "0"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn oracle_rejects_a_mutated_diagram_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("simple.inp");
    lrsx(dir.path(), &["join", input.to_str().unwrap()]);
    let path = dir.path().join("forking_diagrams");
    let text = std::fs::read_to_string(&path).unwrap();
    let mutated: String = text.lines().filter(|l| !l.contains("SR,neg")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, mutated).unwrap();
    let o = lrsx(dir.path(), &["oracle", input.to_str().unwrap(), "--size", "6", "--diagrams", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("uncovered: "), "{}", stdout(&o));
}
