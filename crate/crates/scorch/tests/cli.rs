use std::path::Path;
use std::process::{Command, Output};

fn scorch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scorch")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn solve_writes_outputs_and_exits_zero_on_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = scorch(&[
        "solve", "--family", "logistic", "--gen", "m=60,n=10,seed=2", "--alg", "prox-grad", "--tol", "1e-4",
        "--max-iters", "100000", "--svg", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.csv", "summary.json", "solution.csv", "plot.svg"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("k,objective,smoothed_objective,alpha_bar,eta,rel_step,residual,nnz,wall_secs,omega"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"][0]["status"], "converged");
    let solution = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert_eq!(solution.lines().count(), 11);
}

#[test]
fn solve_exits_two_at_iteration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let o = scorch(&[
        "solve", "--family", "logistic", "--gen", "m=60,n=10,seed=2", "--alg", "prox-grad", "--tol", "1e-14",
        "--max-iters", "3", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 5);
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let missing = scorch(&["solve", "--family", "logistic", "--data", "/nonexistent.libsvm", "--out", &out]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent"));
    let bad_alg = scorch(&["solve", "--family", "logistic", "--gen", "m=20,n=4", "--alg", "newton", "--out", &out]);
    assert_eq!(bad_alg.status.code(), Some(1));
    let bad_alpha = scorch(&["solve", "--family", "logistic", "--gen", "m=20,n=4", "--alpha", "2", "--out", &out]);
    assert_eq!(bad_alpha.status.code(), Some(1));
    let no_family = scorch(&["solve", "--gen", "m=20,n=4"]);
    assert_eq!(no_family.status.code(), Some(1));
    let indivisible = scorch(&["gen", "--family", "group-lasso", "--n", "2001", "--ng", "40", "--out", &out]);
    assert_eq!(indivisible.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&indivisible.stderr).contains("divisible"));
}

#[test]
fn malformed_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.libsvm");
    std::fs::write(&path, "1 1:0.5\n-1 2:oops\n").unwrap();
    let o = scorch(&["solve", "--family", "logistic", "--data", &path.display().to_string(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn gen_is_deterministic_and_feeds_solve() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = scorch(&["gen", "--family", "deconv", "--n", "64", "--seed", "5", "--format", "both", "--out", &out_arg(d.path())]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["data.libsvm", "data.csv", "truth.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let data = a.path().join("data.libsvm").display().to_string();
    let o = scorch(&[
        "solve", "--family", "deconv", "--data", &data, "--alg", "fast-prox-grad", "--max-iters", "50000", "--out",
        &out_arg(b.path()),
    ]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_results_do_not_depend_on_thread_count() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_scorch"))
            .args(["bench", "--family", "logistic", "--gen", "m=80,n=12,seed=4", "--max-iters", "5000", "--out"])
            .arg(dir.path())
            .env("SCORCH_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let mut rdr = csv::Reader::from_path(dir.path().join("bench.csv")).unwrap();
        let headers = rdr.headers().unwrap().clone();
        let keep: Vec<usize> = headers.iter().enumerate().filter(|(_, h)| *h != "wall_secs").map(|(i, _)| i).collect();
        rdr.records()
            .map(|r| {
                let r = r.unwrap();
                keep.iter().map(|&i| r[i].to_string()).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let one = run("1");
    assert_eq!(one.len(), 4);
    assert_eq!(one, run("4"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(scorch(&["--help"]).status.code(), Some(0));
}
