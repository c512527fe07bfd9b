use std::path::Path;
use std::process::{Command, Output};

fn perfhom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfhom"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn column(text: &str, name: &str) -> usize {
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    header.split(',').position(|h| h == name).unwrap()
}

const SWEEP: &str = r#"{
  "command": "resolvent-sweep",
  "bc": "robin",
  "alpha": "1+0i",
  "epsilons": [0.25, 0.125],
  "h_far": 0.0625,
  "compute_delta": false,
  "compute_lambda1": false,
  "record_timing": false
}"#;

#[test]
fn mu_prints_half_pi_and_the_identity_flag() {
    let d = tempfile::tempdir().unwrap();
    let out = perfhom(d.path(), &["mu", "--bc", "robin", "--alpha", "1+0i", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("1.5707963"), "{stdout}");
    assert!(stdout.contains("exact_identity = true"), "{stdout}");
    assert!(d.path().join("mu.csv").exists());
    assert!(d.path().join("manifest.json").exists());
}

#[test]
fn sweep_has_two_rows_with_decreasing_defect() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("sweep.json");
    std::fs::write(&cfg, SWEEP).unwrap();
    let out_dir = d.path().join("run");
    let out = perfhom(&out_dir, &["resolvent-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("# config_sha256="));
    let k = column(&csv, "defect");
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    let a: f64 = rows[0][k].parse().unwrap();
    let b: f64 = rows[1][k].parse().unwrap();
    assert!(b < a, "{a} {b}");
    assert!(out_dir.join("sweep.plot.py").exists());
}

#[test]
fn identical_config_gives_identical_csv() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("sweep.json");
    std::fs::write(&cfg, SWEEP).unwrap();
    let texts: Vec<String> = ["a", "b"]
        .iter()
        .map(|name| {
            let dir = d.path().join(name);
            let out = perfhom(&dir, &["resolvent-sweep", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
            assert_eq!(out.status.code(), Some(0));
            std::fs::read_to_string(dir.join("sweep.csv")).unwrap()
        })
        .collect();
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn malformed_epsilon_exits_two_without_outputs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.json");
    std::fs::write(&cfg, r#"{"command": "resolvent-sweep", "epsilons": [1.5]}"#).unwrap();
    let out_dir = d.path().join("run");
    let out = perfhom(&out_dir, &["resolvent-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists() || std::fs::read_dir(&out_dir).unwrap().next().is_none());
}

#[test]
fn unknown_config_key_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.json");
    std::fs::write(&cfg, r#"{"epsilonz": [0.25]}"#).unwrap();
    let out = perfhom(&d.path().join("run"), &["mu", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_rows_leave_value_columns_empty() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("dir.json");
    std::fs::write(
        &cfg,
        r#"{"command": "resolvent-sweep", "bc": "dirichlet", "epsilons": [0.5, 0.125],
            "h_far": 0.0625, "compute_delta": false, "compute_lambda1": false}"#,
    )
    .unwrap();
    let out_dir = d.path().join("run");
    let out = perfhom(&out_dir, &["resolvent-sweep", "--config", cfg.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let status = column(&csv, "status");
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(["ok", "failed", "skipped"].contains(&r[status].as_str()));
        if r[status] != "ok" {
            for name in ["dofs", "defect", "delta_eps", "lambda1_re", "lambda1_im", "seconds"] {
                assert!(r[column(&csv, name)].is_empty(), "{name} in {r:?}");
            }
        }
    }
    assert_eq!(rows[1][status], "failed");
    assert_eq!(out.status.code(), Some(3));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    let hash = csv.lines().next().unwrap().trim_start_matches("# config_sha256=");
    assert!(manifest.contains(hash));
}
