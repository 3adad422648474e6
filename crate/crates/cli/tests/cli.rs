use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn epd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epd-gossip"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn profile_writes_one_file_per_round() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "p.json", r#"{"experiment":"profile","rounds":[5,12]}"#);
    let out = epd(&["profile", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(tmp.path().join("o/profile_n12.csv")).unwrap();
    let mut lines = body.lines();
    assert_eq!(
        lines.next().unwrap(),
        "v,x_n_simple,heat_oracle,x_n_jacobi,epd_oracle,epd_filtered"
    );
    // box radius n + 5 for the lazy filter
    assert_eq!(lines.count(), 2 * 17 + 1);
    assert!(tmp.path().join("o/profile_n5.csv").exists());
}

#[test]
fn output_is_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "s.json", r#"{"n":40,"alphas":[0.25,0.75]}"#);
    for (dir, threads) in [("a", "1"), ("b", "3")] {
        let out = epd(
            &["alpha-sweep", "--config", &cfg, "--out", dir, "--threads", threads],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    for name in ["alpha_sweep.json", "alpha_sweep_a0.25.csv", "alpha_sweep_a0.75.csv"] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn shape2d_emits_grids_and_ellipse() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "s.json", r#"{"n":12}"#);
    let out = epd(&["shape2d", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o/shape2d_n12.json")).unwrap())
            .unwrap();
    assert_eq!(summary["filter"], "triangular");
    assert!((summary["covariance"][0][1].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let grid = fs::read_to_string(tmp.path().join("o/shape2d_jacobi_n12.csv")).unwrap();
    assert!(grid.starts_with("index_1,index_2,value\n"));
    assert!(tmp.path().join("o/shape2d_simple_n12.csv").exists());
}

#[test]
fn rates_reports_ratio_near_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "r.json", r#"{"filter":"lazy1","n_max":120,"window":[60,120]}"#);
    let out = epd(&["rates", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success());
    let mut reader = csv::Reader::from_path(tmp.path().join("o/rates.csv")).unwrap();
    let last: Vec<String> = reader
        .records()
        .last()
        .unwrap()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    assert_eq!(last[0], "120");
    let ratio: f64 = last[3].parse().unwrap();
    assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    let report = fs::read_to_string(tmp.path().join("o/rates_report.json")).unwrap();
    assert!(report.contains("\"theorem_id\""));
}

#[test]
fn run_descriptor_with_custom_filter_file() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "wide.json",
        r#"{"dim":1,"entries":[{"offset":[0],"weight":0.5},{"offset":[-2],"weight":0.25},{"offset":[2],"weight":0.25}]}"#,
    );
    let cfg = write(
        tmp.path(),
        "run.json",
        r#"{"filter":"wide.json","schedule":"simple","rounds":6,"snapshots":[6]}"#,
    );
    let out = epd(&["run", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(tmp.path().join("o/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 8);
    let field = fs::read_to_string(tmp.path().join("o/field_n6.csv")).unwrap();
    // offsets are even, so odd sites stay empty
    for line in field.lines().skip(1) {
        let mut cols = line.split(',');
        let v: i64 = cols.next().unwrap().parse().unwrap();
        let x: f64 = cols.next().unwrap().parse().unwrap();
        if v % 2 != 0 {
            assert_eq!(x, 0.0);
        }
    }
}

#[test]
fn oracle_dumps_density_and_filtered_samples() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "o.json",
        r#"{"alpha":0.5,"covariance":[[0.5]],"time":6,"box":9}"#,
    );
    let out = epd(&["oracle", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(tmp.path().join("o/oracle.csv")).unwrap();
    let rows: Vec<&str> = body.lines().collect();
    assert_eq!(rows[0], "vertex,u,u_filtered");
    assert_eq!(rows.len(), 1 + 19);
    // uniform density 1 / (2 t sqrt(Q)) inside |v| < t sqrt(Q)
    let center: Vec<&str> = rows[10].split(',').collect();
    assert_eq!(center[0], "0");
    let u: f64 = center[1].parse().unwrap();
    assert!((u - 1.0 / (12.0 * 0.5f64.sqrt())).abs() < 1e-12);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let wrong = write(tmp.path(), "w.json", r#"{"experiment":"rates"}"#);
    let out = epd(&["profile", "--config", &wrong, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not \"profile\""));

    let unknown = write(tmp.path(), "u.json", r#"{"filter_2d":"hexagonal"}"#);
    let out = epd(&["verify-all", "--config", &unknown, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let out = epd(&["run", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let bad_alpha = write(tmp.path(), "a.json", r#"{"alpha":-1.0,"covariance":[[0.5]]}"#);
    let out = epd(&["oracle", "--config", &bad_alpha, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
