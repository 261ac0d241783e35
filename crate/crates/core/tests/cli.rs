//! End-to-end behavior of the `fracsync` binary.

use std::path::Path;
use std::process::{Command, Output};

use fracsync::cli::output::read_csv_rows;

fn fracsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsync")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_row_count_and_first_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = fracsync(&["simulate", "--out", out.to_str().unwrap(), "--t-end", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("simulate.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,z");
    assert_eq!(lines[1], "0,2,-1,1");
    // t_end / h + 1 rows at h = 0.0005
    assert_eq!(lines.len() - 1, 1001);
    let r = report(&out.join("simulate_report.json"));
    assert_eq!(r["config"]["solver"]["h"], 0.0005);
    assert_eq!(r["config"]["simulate"]["initial"], serde_json::json!([2.0, -1.0, 1.0]));
    assert_eq!(r["runs"][0]["status"], "ok");
}

#[test]
fn zero_system_rows_equal_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulate]\nsystem = \"zero\"\ninitial = [0.25, -3.5, 7.0]\n");
    let out = dir.path().join("out");
    let o = fracsync(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--t-end", "1", "--h", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv_rows(&out.join("simulate.csv")).unwrap();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r[1..] == [0.25, -3.5, 7.0]));
}

#[test]
fn synchronize_initial_errors_and_identical_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = fracsync(&["synchronize", "--out", out.to_str().unwrap(), "--t-end", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("synchronize.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,y1,z1,x2,y2,z2,e1,e2,e3,u1,u2,u3"));
    let row0: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row0[7..10], &["6", "3", "2"]);
    let r = report(&out.join("synchronize_report.json"));
    assert_eq!(r["runs"][0]["closed_loop_stability"]["satisfied"], true);
    assert!(r["runs"][0]["sync"]["tol"].as_f64().unwrap() == 1e-3);

    let cfg = write_config(dir.path(), "[synchronize]\nslave_initial = [2.0, -1.0, 1.0]\n");
    let out = dir.path().join("b");
    let o = fracsync(&["synchronize", "--config", &cfg, "--out", out.to_str().unwrap(), "--t-end", "2", "--h", "0.002"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv_rows(&out.join("synchronize.csv")).unwrap();
    for r in &rows {
        assert!(r[7..10].iter().all(|e| e.abs() <= 1e-12), "{r:?}");
    }
    let r = report(&out.join("synchronize_report.json"));
    assert_eq!(r["runs"][0]["sync"]["sync_time"], 0.0);
}

#[test]
fn literal_mode_reports_final_error_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = fracsync(&["synchronize", "--mode", "literal", "--out", out.to_str().unwrap(), "--t-end", "1", "--h", "0.002"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out.join("synchronize_report.json"));
    assert_eq!(r["config"]["synchronize"]["mode"], "literal");
    assert_eq!(r["config"]["synchronize"]["gain"][0], serde_json::json!([0.0, 19.0, -1.0]));
    assert!(r["runs"][0]["final_below_tol"].is_boolean());
}

#[test]
fn invalid_configs_exit_2_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 7] = [
        ("orders = 1.2\n", &[]),
        ("[solver]\nh = 0.0\n", &[]),
        ("[simulate]\nsystem = \"lorenz\"\n", &[]),
        ("[synchronize]\nmode = \"literal\"\nlambda = [-1.0, -1.0, -1.0]\n", &[]),
        ("unknown = 1\n", &[]),
        ("", &["--memory", "last:0"]),
        ("", &["--orders", "0.9,0.9"]),
    ];
    for (i, (text, extra)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), text);
        let out = dir.path().join(format!("out{i}"));
        for cmd in ["simulate", "synchronize", "stability"] {
            let mut args = vec![cmd, "--config", &cfg, "--out", out.to_str().unwrap()];
            args.extend_from_slice(extra);
            let o = fracsync(&args);
            if cmd == "simulate" || !text.contains("system") {
                assert_eq!(o.status.code(), Some(2), "{cmd} {text:?} {extra:?}");
                assert!(!out.exists(), "{cmd} wrote output for {text:?}");
                assert!(String::from_utf8_lossy(&o.stderr).contains("invalid"));
            }
        }
    }
    let o = fracsync(&["simulate", "--config", "/nonexistent/config.toml", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = fracsync(&["synchronize", "--mode", "fuzzy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn error_messages_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[synchronize]\nlambda = [-1.0, 2.0, -1.0]\n");
    let o = fracsync(&["synchronize", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("synchronize.lambda[1]"));
}

#[test]
fn blow_up_exits_3_and_keeps_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    // y' = 1 - βy - x² grows exponentially once β < 0
    let cfg = write_config(dir.path(), "[financial]\nbeta = -50.0\n");
    let out = dir.path().join("out");
    let o = fracsync(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--t-end", "5", "--h", "0.01"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out.join("simulate_report.json"));
    assert_eq!(r["runs"][0]["status"], "non_finite");
    let step = r["runs"][0]["failed_at_step"].as_u64().unwrap() as usize;
    let (_, rows) = read_csv_rows(&out.join("simulate.csv")).unwrap();
    assert_eq!(rows.len(), step);
    assert!(rows.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn stability_sources() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cl");
    let o = fracsync(&["stability", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out.join("stability_report.json"));
    assert_eq!(r["stability"]["satisfied"], true);
    for l in r["stability"]["eigenvalues"].as_array().unwrap() {
        assert_eq!(l, &serde_json::json!([-1.0, 0.0]));
    }

    let cfg = write_config(dir.path(), "[stability]\nsource = \"matrix\"\nmatrix = [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]\n");
    let out = dir.path().join("id");
    assert_eq!(fracsync(&["stability", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let r = report(&out.join("stability_report.json"));
    assert_eq!(r["stability"]["satisfied"], false);
    assert_eq!(r["chaos_threshold"], 0.0);

    let cfg = write_config(dir.path(), "[stability]\nsource = \"financial_jacobian\"\nequilibrium = 2\n");
    let out = dir.path().join("fj");
    assert_eq!(fracsync(&["stability", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let r = report(&out.join("stability_report.json"));
    let q = r["chaos_threshold"].as_f64().unwrap();
    assert!((q - 0.8536).abs() < 1e-3);
    assert_eq!(r["reference"]["reference"], 0.8436);
    assert_eq!(r["reference"]["agrees"], true);
}

#[test]
fn convergence_self_test_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracsync(&["convergence", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&dir.path().join("convergence_report.json"));
    let gated: Vec<_> = r["cases"].as_array().unwrap().iter().filter(|c| c["gated"] == true).collect();
    assert_eq!(gated.len(), 3);
    assert!(gated.iter().all(|c| c["within_band"] == true));
}

#[test]
fn order_sweep_writes_one_csv_per_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "order_sweep = [0.9, 0.95, 1.0]\n");
    let out = dir.path().join("out");
    let o = fracsync(&["synchronize", "--config", &cfg, "--out", out.to_str().unwrap(), "--t-end", "0.5", "--h", "0.005"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out.join("synchronize_report.json"));
    let runs = r["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    for (run, q) in runs.iter().zip(["0.9", "0.95", "1"]) {
        let name = format!("synchronize_q{q}.csv");
        assert_eq!(run["csv"], name.as_str());
        assert!(out.join(&name).exists());
    }
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = fracsync(&["synchronize", "--out", out.to_str().unwrap(), "--t-end", "0.5", "--memory", "last:50"]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["synchronize.csv", "synchronize_report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
