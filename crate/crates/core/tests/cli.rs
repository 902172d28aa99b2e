use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dsaddle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsaddle")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_symmetric_instance_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dsaddle(&["validate", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validate.json")).unwrap()).unwrap();
    assert_eq!(doc["pass"], true);
    let theorem = doc["suites"].as_array().unwrap().iter().find(|s| s["suite"] == "theorem1").unwrap();
    assert_eq!(theorem["report"]["expected"].as_array().unwrap().len(), 6);
}

#[test]
fn shipped_configs_run() {
    for (name, want) in [("validate.json", 0), ("bfbt.json", 0)] {
        let path = configs().join(name);
        let out = dsaddle(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&out), want, "{name}: {}", stdout(&out));
    }
    let path = configs().join("solve-stokes-darcy.json");
    let out = dsaddle(&["solve", "--config", path.to_str().unwrap(), "--instance.n1", "8"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("converged"));
}

#[test]
fn indefinite_s2_hat_is_a_validation_failure() {
    let out = dsaddle(&["validate", "--validate.s2_hat.kind", "indefinite"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("positive definite"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"solver": {"restrat": 5}}"#).unwrap();
    for args in [
        vec!["table", "--config", bad.to_str().unwrap()],
        vec!["table", "--config", "/nonexistent/config.json"],
        vec!["solve", "--solver.kind", "cg"],
        vec!["eig", "--bogus.field", "1"],
        vec!["eig", "--solver.tol"],
        vec!["frobnicate"],
        vec!["export-mtx"],
    ] {
        assert_eq!(code(&dsaddle(&args)), 2, "{args:?}");
    }
}

#[test]
fn help_exits_cleanly() {
    let out = dsaddle(&["--help"]);
    assert_eq!(code(&out), 0);
    for sub in ["validate", "eig", "solve", "table", "export-mtx"] {
        assert!(stdout(&out).contains(sub));
    }
}

#[test]
fn eig_csv_schema() {
    let out = dsaddle(&["eig", "--preconditioner.family", "md"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 34);
    assert!(rows.windows(2).all(|w| w[0] <= w[1]));
    let at = |v: f64| rows.iter().filter(|(re, im)| (re - v).abs() < 5e-5 && im.abs() < 5e-5).count();
    assert_eq!((at(1.0), at(1.6180)), (10, 6));
}

#[test]
fn unreachable_tolerance_renders_maxit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dsaddle(&[
        "table",
        "--table.n1",
        "[8]",
        "--table.kappa",
        "[1]",
        "--solver.tol",
        "0",
        "--solver.maxit",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "8,1,1,10,-,maxit");
}

#[test]
fn single_cell_table_matches_direct_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let t = dsaddle(&["table", "--table.n1", "[16]", "--table.kappa", "[0.01]", "--out", d]);
    assert_eq!(code(&t), 0);
    let s = dsaddle(&["solve", "--instance.kind", "stokes-darcy", "--instance.n1", "16", "--instance.kappa", "0.01", "--out", d]);
    assert_eq!(code(&s), 0);
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let table_its: usize = csv.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    let solve: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(solve["iterations"].as_u64().unwrap() as usize, table_its);
}

#[test]
fn timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = dsaddle(&["table", "--table.n1", "[8]", "--table.kappa", "[1]", "--output.timings", "true", "--out", d]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let secs = csv.lines().nth(1).unwrap().split(',').nth(4).unwrap();
    assert!(secs.parse::<f64>().is_ok(), "{secs}");
}

#[test]
fn export_then_solve_from_directory() {
    let dir = tempfile::tempdir().unwrap();
    let sys_dir = dir.path().join("sys");
    let out = dsaddle(&[
        "export-mtx",
        "--instance.kind",
        "stokes-darcy",
        "--instance.n1",
        "8",
        "--out",
        sys_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    for f in ["A.mtx", "B.mtx", "C.mtx", "D.mtx", "manifest.json"] {
        assert!(sys_dir.join(f).exists(), "{f}");
    }
    let out = dsaddle(&[
        "solve",
        "--instance.kind",
        "mtx-directory",
        "--instance.path",
        sys_dir.to_str().unwrap(),
        "--preconditioner.family",
        "mlt",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("max error"));
}

#[test]
fn seeds_change_random_instances() {
    let a = stdout(&dsaddle(&["eig", "--seed", "1"]));
    let b = stdout(&dsaddle(&["eig", "--seed", "1"]));
    let c = stdout(&dsaddle(&["eig", "--seed", "2", "--preconditioner.family", "md"]));
    let d = stdout(&dsaddle(&["eig", "--seed", "3", "--preconditioner.family", "md"]));
    assert_eq!(a, b);
    assert_ne!(c, d);
}

fn eig_rows(args: &[&str]) -> Vec<(f64, f64)> {
    let out = dsaddle(args);
    assert_eq!(code(&out), 0);
    stdout(&out)
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn stokes_darcy_spectra_from_cli() {
    let with_spec = |spec: &'static str| {
        eig_rows(&["eig", "--instance.kind", "stokes-darcy", "--instance.n1", "8", "--preconditioner", spec])
    };
    // exact blocks: every eigenvalue is 1, perturbed only by rounding in
    // size-3 Jordan blocks
    let exact = with_spec(r#"{"family":"mlt","s2_solve":{"kind":"exact"}}"#);
    assert_eq!(exact.len(), 248);
    assert!(exact.iter().all(|(re, im)| (re - 1.0).abs() <= 1e-4 && im.abs() <= 1e-4));

    let bfbt = with_spec(r#"{"family":"mlt","s2_solve":{"kind":"bfbt"}}"#);
    assert!(bfbt.iter().all(|(re, _)| *re >= 0.9));

    let md = with_spec(r#"{"family":"md","s2_solve":{"kind":"bfbt"}}"#);
    assert!(md.iter().all(|(_, im)| im.abs() <= 0.01));
}
