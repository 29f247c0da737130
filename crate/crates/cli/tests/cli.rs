use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prime-sphere"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn column(lines: &[String], name: &str) -> Vec<String> {
    let i = lines[0].split(',').position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    lines[1..].iter().map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn enumerate_single_and_empty_spheres() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["enumerate", "--n", "5", "--k", "2", "--lambda", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&tmp.path().join("points.csv"));
    assert_eq!(lines[0], "x1,x2,x3,x4,x5,weight");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("2,2,2,2,2,"));

    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["enumerate", "--n", "5", "--k", "2", "--lambda", "19"]);
    assert!(out.status.success());
    assert_eq!(data_lines(&tmp.path().join("points.csv")).len(), 1);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["spheres"][0]["flag"], "empty");
    assert_eq!(summary["spheres"][0]["count"], 0);
}

#[test]
fn several_radii_get_their_own_files() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["enumerate", "--lambda", "20,29,53"]);
    assert!(out.status.success());
    for l in [20, 29, 53] {
        assert!(tmp.path().join(format!("points_{l}.csv")).exists());
    }
}

#[test]
fn hua_scan_reports_series_and_rejects_empty_progressions() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["hua-scan", "--lambda-min", "500", "--lambda-max", "1500", "--q-max", "24"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&tmp.path().join("hua_scan.csv"));
    assert!(column(&lines, "q_max").iter().all(|q| q == "24"));
    assert!(column(&lines, "sing_series_trunc").iter().all(|v| v.parse::<f64>().unwrap() > 0.0));

    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["hua-scan", "--lambda-min", "20", "--lambda-max", "40", "--progression", "mod:1:1000"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("hua_scan.csv").exists());
}

#[test]
fn improving_endpoints() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["improving", "--lambda-min", "500", "--lambda-max", "800", "--p", "1", "--p", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&tmp.path().join("improving.csv"));
    let p = column(&lines, "p");
    let upper = column(&lines, "upper");
    let lower = column(&lines, "lower_delta");
    for i in 0..p.len() {
        match p[i].as_str() {
            "2" => assert_eq!(upper[i], "1"),
            "1" => assert_eq!(upper[i], lower[i]),
            other => panic!("unexpected p {other}"),
        }
    }
}

#[test]
fn multiplier_origin_row() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["multiplier", "--lambda", "293", "--grid", "1", "--quad-points", "64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&tmp.path().join("multiplier.csv"));
    assert_eq!(column(&lines, "re_raw"), ["1"]);
    assert_eq!(column(&lines, "im_raw"), ["0"]);
    assert_eq!(column(&lines, "overlap_flag"), ["1"]);
}

#[test]
fn json_format() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["dyadic", "--lambda-min", "128", "--lambda-max", "2047", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("dyadic.json")).unwrap()).unwrap();
    assert_eq!(doc["columns"][0], "block_start");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn config_file_then_flags() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.txt");
    fs::write(&cfg, "n = 5\nk = 2\nlambda = 19\n").unwrap();
    let out = run(&tmp.path().join("a"), &["enumerate", "--config", cfg.to_str().unwrap(), "--lambda", "20"]);
    assert!(out.status.success());
    let recorded = fs::read_to_string(tmp.path().join("a/config.txt")).unwrap();
    assert!(recorded.starts_with("# prime-sphere enumerate\n"));
    assert!(recorded.contains("\nlambda = 20\n"));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let code = |args: &[&str]| run(tmp.path(), args).status.code();
    assert_eq!(code(&["enumerate", "--format", "xml"]), Some(2));
    assert_eq!(code(&["enumerate", "--n", "0", "--lambda", "20"]), Some(2));
    let cfg = tmp.path().join("bad.txt");
    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&["enumerate", "--config", cfg.to_str().unwrap()]), Some(2));
    assert_eq!(code(&["multiplier", "--lambda", "293", "--grid", "100"]), Some(4));
    assert_eq!(code(&["kernel-decay", "--lambda", "293"]), Some(3));
    assert_eq!(code(&["selftest"]), Some(0));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = run(&blocker.join("sub"), &["enumerate", "--lambda", "20"]);
    assert_eq!(out.status.code(), Some(1));
}
