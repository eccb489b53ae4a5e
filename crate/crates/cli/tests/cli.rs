use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlab")).args(args).env_remove("QLAB_DETERMINISTIC").output().expect("spawn qlab")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_svg(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    assert!(!text.contains("href") && !text.contains("<image"));
    assert!(text.len() < 1 << 20, "{} bytes", text.len());
}

/// Re-serializing a JSON report through `Value` keeps every byte.
fn assert_round_trip(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let mut again = serde_json::to_string_pretty(&v).unwrap();
    again.push('\n');
    assert_eq!(again, text);
}

#[test]
fn torus_sweep_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["sweep", "--experiment", "torus-cluster", "--k", "4..12", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,l2_norm,sup_norm,residual_l2,origin_value,cluster_dim"));
    assert_eq!(lines.count(), 9);
    assert_svg(&dir.path().join("scaling.svg"));
    let report = dir.path().join("report.json");
    assert_round_trip(&report);
    let v = read_json(&report);
    assert_eq!(v["config"]["command"], "sweep");
    assert_eq!(v["config"]["k_min"], 4);
    assert_eq!(v["verdict"], "pure-power");
    assert!((v["report"]["exponent"].as_f64().unwrap() + 0.5).abs() < 0.05);
}

#[test]
fn counterexample_sweep_is_log_corrected() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["sweep", "--experiment", "hyperbolic-counterexample", "--k", "6..16", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("report.json"));
    assert_eq!(v["verdict"], "log-corrected");
    assert_eq!(v["report"]["verdict"], "log-corrected");
    // origin_value filled, cluster_dim empty
    let csv = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with(','));
    assert_eq!(row.split(',').count(), 6);
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["sweep", "--experiment", "nope", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nope") && err.contains("usage"), "{err}");
}

#[test]
fn bad_flags_and_help() {
    assert_eq!(qlab(&["sweep", "--k", "9..3"]).status.code(), Some(1));
    assert_eq!(qlab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qlab(&["--help"]).status.code(), Some(0));
    assert_eq!(qlab(&["--version"]).status.code(), Some(0));
}

#[test]
fn zero_potential_is_all_case_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["classify", "--potential", "zero", "--k", "6", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("cover.json");
    assert_round_trip(&path);
    let v = read_json(&path);
    let decisions = v["decisions"].as_array().unwrap();
    assert!(!decisions.is_empty());
    assert!(decisions.iter().all(|d| d["case_id"] == 1));
    assert_svg(&dir.path().join("cover.svg"));
}

#[test]
fn linear_potential_case_two_radii_are_gradients() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["classify", "--potential", "linear", "--k", "8", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("cover.json"));
    for d in v["decisions"].as_array().unwrap() {
        if d["case_id"] == 2 || d["case_id"] == 4 {
            let beta = d["gradient_norm"].as_f64().unwrap();
            assert!((beta - 0.5).abs() < 1e-12);
            assert_eq!(d["beta_or_c"].as_f64().unwrap(), beta);
        }
    }
    assert_svg(&dir.path().join("cover.svg"));
}

#[test]
fn steep_potential_fails_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["classify", "--coefficients", "0,100", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("suggested_c"));
    let v = read_json(&dir.path().join("normalization.json"));
    let c = v["normalization"]["suggested_c"].as_f64().unwrap();
    assert!(c > 0.0 && c < 0.1, "{c}");
    assert!(!dir.path().join("cover.json").exists());
}

#[test]
fn counterexample_rejects_large_h() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["counterexample", "--k", "1..3", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("too small"));
}

#[test]
fn counterexample_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["counterexample", "--k", "6..9", "--range", "restricted", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("counterexample.json");
    assert_round_trip(&path);
    let v = read_json(&path);
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    for e in entries {
        assert_eq!(e["certified"], true);
        assert!(e["orthogonality_max"].as_f64().unwrap() <= 1e-12);
        assert_eq!(e["summary"]["range"], "restricted");
        assert!(e["restricted"]["x1_squared_over_h"].as_f64().unwrap() < 100.0);
    }
    assert_svg(&dir.path().join("profile.svg"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# torus run\nexperiment = torus-cluster\nk = 4..6\ncluster-width = 2\nseed = 7\n").unwrap();
    let out = dir.path().join("out");
    let o = qlab(&["sweep", "--config", cfg.to_str().unwrap(), "--k", "4..9", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out.join("report.json"));
    assert_eq!(v["config"]["k_max"], 9);
    assert_eq!(v["config"]["cluster_width"], 2.0);
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["report"]["config"]["width_constant"], 2.0);

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(qlab(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn deterministic_mode_uses_one_worker_and_same_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qlab"))
        .args(["sweep", "--experiment", "torus-cluster", "--k", "4..10", "--workers", "4", "--out", &out_arg(a.path())])
        .env("QLAB_DETERMINISTIC", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = qlab(&["sweep", "--experiment", "torus-cluster", "--k", "4..10", "--workers", "1", "--out", &out_arg(b.path())]);
    assert_eq!(o.status.code(), Some(0));
    let va = read_json(&a.path().join("report.json"));
    assert_eq!(va["config"]["workers"], 1);
    assert_eq!(va["report"], read_json(&b.path().join("report.json"))["report"]);
    assert_eq!(fs::read(a.path().join("records.csv")).unwrap(), fs::read(b.path().join("records.csv")).unwrap());
}

#[test]
fn cluster_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["cluster", "--k", "2", "--seed", "3", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("cluster.json"));
    let e = &v["entries"][0];
    assert_eq!(e["cluster_dim"], e["eigen_count"]);
    assert!(e["random_sup"].as_f64().unwrap() <= e["coherent_sup"].as_f64().unwrap() + 1e-12);

    let o = qlab(&["verify", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = read_json(&dir.path().join("verify.json"));
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn broken_certificate_exits_two() {
    // the elliptic quasimode has residual ≈ 0.71h, above a 0.5h certificate
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["sweep", "--experiment", "elliptic", "--k", "2..3", "--cluster-width", "0.5", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("report.json").exists());
}
