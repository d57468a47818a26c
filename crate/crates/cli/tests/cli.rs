use std::fs;
use std::process::{Command, Output};

fn bifrost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bifrost"))
        .args(args)
        .env_remove("BIFROST_THREADS")
        .output()
        .expect("failed to run bifrost")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn ratio_grid_csv() {
    let o = bifrost(&["ratio-grid", "--eta1", "0.5:0.95:3", "--ns", "0:1:3", "--nth", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("eta1,n_s,n_th,h_q,h_c,ratio"));
    assert!(!text.contains('\r'));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 9);
    // eta1-major order.
    assert_eq!(rows[0][0], 0.5);
    assert_eq!(rows[3][0], 0.725);
    for r in rows.iter().filter(|r| r[1] == 0.0) {
        assert!((r[5] - 1.0).abs() < 1e-9);
    }
    let best = rows.iter().find(|r| r[0] == 0.95 && r[1] == 1.0).unwrap();
    assert!(best[5] > 1.0);
}

#[test]
fn ratio_grid_is_byte_deterministic_across_threads() {
    let args = ["ratio-grid", "--eta1", "0.1:0.9:5", "--ns", "0.01:2:7", "--nth", "0.01:100:9", "--log-nth"];
    let a = bifrost(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_bifrost"))
        .args(args)
        .env("BIFROST_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rows = csv_rows(&stdout(&a));
    assert_eq!(rows.len(), 5 * 7 * 9);
    assert_eq!(rows[8][2], 100.0);
    assert!((rows[4][2] - 1.0).abs() < 1e-12);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_bifrost"))
        .args(["ratio-grid", "--eta1", "0.5", "--ns", "1", "--nth", "1"])
        .env("BIFROST_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    let out = dir.path().join("grid.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"eta1": "0.2:0.8:4", "n_s": 1, "n_th": {{"min": 0.1, "max": 10, "steps": 3}}, "log_nth": true, "format": "json", "output": {:?}}}"#,
            out.display().to_string()
        ),
    )
    .unwrap();
    let o = bifrost(&["ratio-grid", "--config", cfg.to_str().unwrap(), "--eta1", "0.9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["eta1"], 0.9);
    assert!((rows[1]["n_th"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    fs::write(&cfg, r#"{"eta1": 0.5, "bogus": 1}"#).unwrap();
    let o = bifrost(&["ratio-grid", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = bifrost(&["ratio-grid", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(bifrost(&["ratio-grid", "--eta1", "0.5:0.4:3", "--ns", "1", "--nth", "1"]).status.code(), Some(1));
    assert_eq!(bifrost(&["ratio-grid", "--eta1", "0.5:0.9:0", "--ns", "1", "--nth", "1"]).status.code(), Some(1));
    assert_eq!(bifrost(&["ratio-grid", "--ns", "1", "--nth", "1"]).status.code(), Some(1));
    assert_eq!(bifrost(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(bifrost(&["--help"]).status.code(), Some(0));
    let o = bifrost(&["ratio-grid", "--eta1", "0.5", "--ns", "1", "--nth", "1", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bifrost(&["qfi", "--eta1", "0", "--ns", "1", "--nth", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta1"));
}

#[test]
fn qfi_point() {
    let o = bifrost(&["qfi", "--eta1", "0.75", "--ns", "1", "--nth", "1"]);
    assert!(o.status.success());
    let v = json(&o);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    for r in results {
        assert!(r["rel_deviation"].as_f64().unwrap() < 1e-6);
    }
    assert_eq!(results[0]["probe"], "tmsv");
}

#[test]
fn sld_point() {
    let o = bifrost(&["sld", "--eta1", "0.6", "--ns", "0.5", "--nth", "2", "--probe", "tmsv"]);
    assert!(o.status.success());
    let v = json(&o);
    assert!(v["tmsv"]["max_deviation"].as_f64().unwrap() < 1e-6);
    assert!(v.get("coherent").is_none());
}

#[test]
fn qi_check_passes() {
    let o = bifrost(&["qi-check"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert!(v["checks"][0]["max_deviation"].as_f64().unwrap() < 1e-6);
}

#[test]
fn validate_single_point() {
    let o = bifrost(&["validate", "--eta1", "0.5", "--ns", "0.2", "--nth", "0.1", "--cutoff", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    for c in checks {
        assert!(c["rel_deviation"].as_f64().unwrap() < 1e-3);
    }
    // A tolerance nobody can meet is reported as a regression.
    let o = bifrost(&["validate", "--eta1", "0.5", "--ns", "0.2", "--nth", "0.1", "--probe", "coherent", "--tolerance", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&o)["pass"], false);
}

#[test]
fn thermal_approx() {
    let o = bifrost(&["thermal-approx", "--ghz", "5", "--temp", "300", "--delta-frac", "0.2"]);
    assert!(o.status.success());
    let v = json(&o);
    assert!((v["rel_error"].as_f64().unwrap() - 0.04).abs() < 5e-3);
    assert!((v["occupation"].as_f64().unwrap() - 1250.0).abs() < 12.5);
    assert_eq!(bifrost(&["thermal-approx", "--ghz", "5", "--temp", "-1", "--delta-frac", "0.2"]).status.code(), Some(1));
}

#[test]
fn circuit() {
    let o = bifrost(&["circuit", "--ns", "1"]);
    assert!(o.status.success());
    let v = json(&o);
    assert!((v["solution"]["mu"].as_f64().unwrap() - 1.5f64.sqrt()).abs() < 1e-12);
    for r in v["identification_residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() < 1e-9);
    }
    assert_eq!(bifrost(&["circuit", "--ns", "0"]).status.code(), Some(1));
}
