use hermite_wave::cli::{main_with, BranchesFile};
use hermite_wave::verify::FidelityReport;
use std::path::{Path, PathBuf};

fn data(file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(file).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> i32 {
    main_with(std::iter::once("hermite-wave").chain(args.iter().copied()))
}

fn out(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

fn branches(dir: &Path) -> BranchesFile {
    serde_json::from_str(&std::fs::read_to_string(dir.join("branches.json")).unwrap()).unwrap()
}

#[test]
fn derive_writes_the_constant_branch() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["derive", "--equation", &data("klein_gordon.eq"), "--case", "constant", "--out", &out(dir.path())]);
    assert_eq!(code, 0);
    let file = branches(dir.path());
    assert_eq!(file.runs.len(), 1);
    assert!(file.runs[0].branches.iter().any(|b| {
        b.assignments.get("g0").map(String::as_str) == Some("0") && b.assignments.get("g1").map(String::as_str) == Some("0")
    }));
}

#[test]
fn bbm_trig_run_fixes_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["derive", "--equation", &data("bbm.eq"), "--case", "trig", "--out", &out(dir.path())]);
    assert_eq!(code, 0);
    let file = branches(dir.path());
    assert!(file.runs[0].branches.iter().any(|b| b.assignments.contains_key("lambda")));
}

#[test]
fn undeclared_parameter_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let eq = dir.path().join("bad.eq");
    std::fs::write(&eq, "params: a\nu_t + b*u_x = 0\n").unwrap();
    assert_eq!(run(&["derive", "--equation", &out(&eq), "--out", &out(dir.path())]), 1);
    assert!(!dir.path().join("branches.json").exists());
}

#[test]
fn missing_file_and_bad_flags_are_input_errors() {
    assert_eq!(run(&["derive", "--equation", "/nonexistent/x.eq"]), 1);
    assert_eq!(run(&["derive", "--sigma", "2"]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
}

#[test]
fn empty_branches_file_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("branches.json");
    std::fs::write(&path, "").unwrap();
    assert_eq!(run(&["verify", "--branches", &out(&path), "--out", &out(dir.path())]), 0);
    let report: FidelityReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fidelity.json")).unwrap()).unwrap();
    assert!(report.entries.is_empty() && report.derived.is_empty());
}

#[test]
fn verify_reads_only_the_branches_file() {
    let dir = tempfile::tempdir().unwrap();
    let eq = dir.path().join("kg.eq");
    std::fs::copy(data("klein_gordon.eq"), &eq).unwrap();
    let o = out(dir.path());
    assert_eq!(run(&["derive", "--equation", &out(&eq), "--case", "constant", "--out", &o]), 0);
    std::fs::remove_file(&eq).unwrap();
    assert_eq!(run(&["verify", "--out", &o]), 0);
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn sample_writes_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&[
        "sample",
        "--entry",
        "klein-gordon case 1",
        "--grid",
        "0:1:2,0:1:2",
        "--out",
        &out(dir.path()),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("sample.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "x,t,u");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!("equation = {}\ncase = kummer\nout = first\n", data("bbm.eq")),
    )
    .unwrap();
    let o = out(&dir.path().join("second"));
    assert_eq!(run(&["derive", "--config", &out(&cfg), "--case", "constant", "--out", &o]), 0);
    let file = branches(&dir.path().join("second"));
    assert_eq!(file.runs.len(), 1);
    assert_eq!(file.runs[0].case.to_string(), "constant");
    assert!(!dir.path().join("first").exists());
}

#[test]
fn tiny_budget_reports_incomplete() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&[
        "derive",
        "--equation",
        &data("klein_gordon.eq"),
        "--case",
        "kummer",
        "--max-branches",
        "1",
        "--out",
        &out(dir.path()),
    ]);
    assert_eq!(code, 2);
    assert!(branches(dir.path()).runs[0].incomplete);
}
