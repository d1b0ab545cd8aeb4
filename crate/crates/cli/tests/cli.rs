use std::io::Write;
use std::process::{Command, Output};

use kappa_cli::commands::{CorrReport, FitReport, MatrixReport};
use kappa_core::simulate::CalibrationReport;
use tempfile::NamedTempFile;

fn kappa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kappa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn file(contents: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

const DATA: &str = "x,y,z,w\n\
1,2.5,3,0\n\
2,1.0,5,0\n\
3,4.2,4,1\n\
4,3.3,8,1\n\
5,6.1,7,0\n\
6,5.0,9,1\n\
7,7.7,6,1\n\
8,6.4,11,0\n";

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn corr_json_round_trips_and_matches_library() {
    let f = file(DATA);
    let path = f.path().to_str().unwrap();
    let out = kappa(&["corr", path, "--col-x", "x", "--col-y", "y", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let report: CorrReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", text);

    let x = kappa_core::ObservationVector::new(vec![1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
    let y = kappa_core::ObservationVector::new(vec![2.5, 1.0, 4.2, 3.3, 6.1, 5.0, 7.7, 6.4]).unwrap();
    let e = kappa_core::estimator::estimate(&x, &y).unwrap();
    assert_eq!(report.estimate, e);
    assert_eq!(report.n, 8);
    assert!(report.se_n_minus_2 > report.se_n);
    assert!(!report.wald.boundary);
}

#[test]
fn json_output_is_byte_identical() {
    let f = file(DATA);
    let path = f.path().to_str().unwrap();
    for args in [
        vec!["matrix", path, "--format", "json"],
        vec!["fit", path, "--response", "z", "--predictors", "x,y", "--format", "json"],
    ] {
        let a = kappa(&args);
        let b = kappa(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn matrix_and_fit_reports_parse() {
    let f = file(DATA);
    let path = f.path().to_str().unwrap();
    let m: MatrixReport = serde_json::from_slice(&kappa(&["matrix", path, "--format", "json"]).stdout).unwrap();
    assert_eq!(m.columns, vec!["x", "y", "z", "w"]);
    assert_eq!(m.pairs.len(), 6);
    assert_eq!(m.matrix[1][0], m.matrix[0][1]);

    let out = kappa(&["fit", path, "--response", "z", "--predictors", "x,y", "--format", "json"]);
    let fit: FitReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(fit.fit.converged);
    assert_eq!(fit.fit.theta.len(), 2);
    assert_eq!(fit.contrasts, 28);
    assert!(fit.estimating_equation_residual.iter().all(|r| r.abs() < 1e-8));
}

#[test]
fn table_output() {
    let f = file(DATA);
    let path = f.path().to_str().unwrap();
    let out = kappa(&["corr", path, "--col-x", "x", "--col-y", "z", "--variance-denominator", "n-2", "--c", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("kappa correlation: x vs z (n = 8)"));
    assert!(text.contains("Wald (c = 0.5)"));
}

#[test]
fn no_header_and_delimiter() {
    let f = file("1;3\n2;1\n3;2\n4;5\n");
    let path = f.path().to_str().unwrap();
    let out = kappa(&["corr", path, "--no-header", "--delimiter", ";", "--col-x", "col1", "--col-y", "col2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn input_errors_exit_2() {
    let f = file(DATA);
    let path = f.path().to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["corr", "/nonexistent.csv", "--col-x", "x", "--col-y", "y"],
        vec!["corr", path, "--col-x", "x", "--col-y", "nope"],
        vec!["corr", path, "--col-x", "x", "--col-y", "y", "--c", "-1"],
    ];
    for args in cases {
        let out = kappa(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let ragged = file("x,y\n1,2\n3\n");
    let out = kappa(&["matrix", ragged.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let na = file("x,y\n1,2\n3,\n4,1\n5,7\n");
    let p = na.path().to_str().unwrap();
    assert_eq!(kappa(&["corr", p, "--col-x", "x", "--col-y", "y"]).status.code(), Some(2));
    assert_eq!(
        kappa(&["corr", p, "--col-x", "x", "--col-y", "y", "--na-policy", "drop-row"]).status.code(),
        Some(0)
    );
}

#[test]
fn numerical_failures_exit_3() {
    let f = file("x,c\n1,5\n2,5\n3,5\n");
    let out = kappa(&["corr", f.path().to_str().unwrap(), "--col-x", "x", "--col-y", "c"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`c`"));

    let out = kappa(&["matrix", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`c`"));

    let d = file(DATA);
    let out = kappa(&["fit", d.path().to_str().unwrap(), "--response", "z", "--predictors", "x", "--max-iter", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_is_deterministic() {
    let cfg = file(
        "study = \"calibrate\"\n\
         generator = \"discrete-uniform\"\n\
         k = 3\n\
         n_grid = [10, 20]\n\
         replicates = 100\n\
         seed = 5\n",
    );
    let path = cfg.path().to_str().unwrap();
    let a = kappa(&["simulate", path, "--format", "json"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = kappa(&["simulate", path, "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let report: CalibrationReport = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report.seed, 5);
    assert_eq!(report.c_by_n.len(), 2);

    let c = kappa(&["simulate", path, "--format", "json", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_config_errors_exit_2() {
    for text in ["replicates = 10\n", "bogus_key = 1\n", "generator = \"cauchy\"\n", "n_grid = \"x\"\n"] {
        let cfg = file(text);
        let out = kappa(&["simulate", cfg.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
}
