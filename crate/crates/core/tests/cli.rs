//! End-to-end tests of the `torus-geo` binary: exit codes, report contents
//! and golden files. Set `UPDATE_GOLDEN=1` to rewrite the goldens.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torus-geo"))
        .current_dir(manifest_dir())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn check_golden(name: &str, actual: &str) {
    let path = manifest_dir().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_sine_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let o = run(&["analyze", "--preset", "sine", "--ell", "5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report = json_file(&out);
    assert_eq!(report["extremal"]["direction"], serde_json::json!([5, -1]));
    assert!((report["extremal"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(report["extremal"]["length"].as_f64().unwrap(), 26f64.sqrt());
    assert!(report.get("verification").is_none());
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["input", "norms", "bound", "extremal", "meta"] {
        assert!(keys.contains(&k), "missing {k}");
    }
}

#[test]
fn analyze_sine_golden() {
    let o = run(&["analyze", "--preset", "sine", "--ell", "5"]);
    assert_eq!(o.status.code(), Some(0));
    check_golden("analyze_sine5.json", &stdout(&o));
}

#[test]
fn analyze_cos_file_golden() {
    let o = run(&["analyze", "-i", "tests/data/cos.json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["extremal"]["direction"], serde_json::json!([0, 1]));
    assert!((report["extremal"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    check_golden("analyze_cos.json", &text);
}

#[test]
fn analyze_is_byte_deterministic() {
    let args = ["analyze", "--preset", "random", "--n", "6", "--seed", "77", "--decay", "0.5"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn s_is_recorded() {
    let o = run(&["analyze", "--preset", "sine", "--ell", "1", "--s", "3"]);
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["bound"]["s"], 3);
    assert_eq!(report["extremal"]["direction"], serde_json::json!([1, -1]));
    assert!(report["norms"]["deriv_l1"]["3"].is_number());
}

#[test]
fn keep_table_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["analyze", "--preset", "sine", "--ell", "2", "--keep-table", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r.directions.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("a,b,length,theta_star,value"));
    let rows: Vec<&str> = lines.collect();
    let report = json_file(&out);
    assert_eq!(rows.len() as u64, report["extremal"]["scanned"].as_u64().unwrap());
    assert!(rows.iter().any(|r| r.starts_with("2,-1,")));
    assert!(!csv.contains('\r'));
}

#[test]
fn verify_exit_codes() {
    let o = run(&["verify", "--preset", "random", "--n", "8", "--decay", "1", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let checks = report["verification"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 6);
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert!(String::from_utf8_lossy(&o.stderr).contains("6/6 checks passed"));

    assert_eq!(run(&["verify", "--preset", "sine", "--ell", "3"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "-i", "tests/data/malformed.json"]).status.code(), Some(3));
    assert_eq!(run(&["analyze", "-i", "tests/data/mean.json"]).status.code(), Some(3));
    assert_eq!(run(&["analyze", "-i", "tests/data/does-not-exist.json"]).status.code(), Some(2));
    assert_eq!(run(&["analyze"]).status.code(), Some(3));
}

#[test]
fn unwritable_output_is_io_error() {
    let o = run(&["analyze", "--preset", "sine", "-o", "/nonexistent-dir/x/out.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_field_returns_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zero.json");
    std::fs::write(&input, r#"{"coefficients": []}"#).unwrap();
    let o = run(&["analyze", "-i", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["extremal"]["direction"], serde_json::json!([1, 0]));
    assert_eq!(report["extremal"]["value"], 0.0);
    assert!(report["bound"].is_null());
}

#[test]
fn sweep_table() {
    let o = run(&["sweep", "--ell-min", "1", "--ell-max", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    check_golden("sweep_1_12.csv", &text);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let ell: f64 = rec[0].parse().unwrap();
        let len: f64 = rec[1].parse().unwrap();
        assert_eq!(len, (1.0 + ell * ell).sqrt());
        let deriv: f64 = rec[4].parse().unwrap();
        let limit = 8.0 * std::f64::consts::PI;
        assert!((deriv / (ell * ell) - limit).abs() / limit < 1e-3);
        n += 1;
    }
    assert_eq!(n, 12);

    let empty = run(&["sweep", "--ell-min", "4", "--ell-max", "3"]);
    assert_eq!(stdout(&empty), "ell,extremal_length,theorem_radius,cutoff_radius,deriv_l1_s,grad_l2,l2\n");
}

#[test]
fn enumerate_tables() {
    let o = run(&["enumerate", "--radius", "1"]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows, ["0,1,1.0", "1,0,1.0"]);

    let o = run(&["enumerate", "--radius", "5"]);
    let text = stdout(&o);
    check_golden("enumerate_r5.csv", &text);
    let mut got: Vec<(i64, i64)> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split(',');
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    got.sort();
    let mut expected = Vec::new();
    for a in -6i64..=6 {
        for b in -6i64..=6 {
            let canonical = a > 0 || (a == 0 && b > 0);
            let coprime = (1..=6).filter(|d| a % d == 0 && b % d == 0).count() == 1;
            if canonical && coprime && a * a + b * b <= 25 {
                expected.push((a, b));
            }
        }
    }
    expected.sort();
    assert_eq!(got, expected);

    let o = run(&["enumerate", "--radius", "100"]);
    let summary = stdout(&o).lines().last().unwrap().to_string();
    let density: f64 = summary
        .split(',')
        .find_map(|kv| kv.strip_prefix("coprime_density="))
        .unwrap()
        .parse()
        .unwrap();
    let target = 6.0 / std::f64::consts::PI.powi(2);
    assert!((density - target).abs() / target < 0.05);
}
