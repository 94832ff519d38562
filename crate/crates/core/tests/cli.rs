//! End-to-end runs of the `anokat` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn anokat(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anokat"))
        .args(args)
        .current_dir(cwd)
        .env("ANOKAT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn tiny_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/tiny.json")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn zero_stages_writes_an_empty_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config();
    let out = anokat(&["run", "--config", cfg.to_str().unwrap(), "--stages", "0", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ledger: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/ledger.json")).unwrap()).unwrap();
    assert_eq!(ledger["stages"].as_array().unwrap().len(), 0);
    assert_eq!(ledger["passed"], true);
    assert!(csv_rows(&dir.path().join("o/stages.csv")).is_empty());
}

#[test]
fn malformed_config_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\n  \"stages\": 2,\n  \"atoms\": ,\n}").unwrap();
    let out = anokat(&["run", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    fs::write(dir.path().join("unknown.json"), "{\"stagez\": 2}").unwrap();
    assert_eq!(anokat(&["run", "--config", "unknown.json"], dir.path()).status.code(), Some(2));
    assert_eq!(anokat(&["run", "--config", "missing.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn unknown_suite_and_bad_grid_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(anokat(&["verify", "everything"], dir.path()).status.code(), Some(2));
    assert_eq!(anokat(&["run", "--surface", "torus"], dir.path()).status.code(), Some(2));
}

#[test]
fn tiny_run_certifies_and_resume_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config();
    let cfg = cfg.to_str().unwrap();
    let full = anokat(&["run", "--config", cfg, "--out", "full"], dir.path());
    assert_eq!(full.status.code(), Some(0), "{}", String::from_utf8_lossy(&full.stderr));

    let rows = csv_rows(&dir.path().join("full/stages.csv"));
    assert_eq!(rows.len(), 2);
    let eps: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(eps[1] < eps[0]);

    let resumed = anokat(&["resume", "full/checkpoint_stage1.json", "--out", "resumed"], dir.path());
    assert_eq!(resumed.status.code(), Some(0), "{}", String::from_utf8_lossy(&resumed.stderr));
    for file in ["ledger.json", "stages.csv", "eps_profile.csv"] {
        let a = fs::read(dir.path().join("full").join(file)).unwrap();
        let b = fs::read(dir.path().join("resumed").join(file)).unwrap();
        assert!(a == b, "{file} differs after resume");
    }
    let state = |d: &str| {
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(d).join("checkpoint_stage2.json")).unwrap()).unwrap();
        v["state"].clone()
    };
    assert_eq!(state("full"), state("resumed"));

    let dm = anokat(&["delta-merg", "full/checkpoint.json", "--grid", "1x4"], dir.path());
    assert_eq!(dm.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&dm.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap().is_finite());
    assert_eq!(anokat(&["delta-merg", "full/checkpoint.json", "--grid", "4"], dir.path()).status.code(), Some(2));
}

#[test]
fn plotdata_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = anokat(&["run", "--config", tiny_config().to_str().unwrap(), "--out", "r"], dir.path());
    assert_eq!(run.status.code(), Some(0));

    // Orbits of h = id with α = 1/5 have period five.
    let out = anokat(&["run", "--config", tiny_config().to_str().unwrap(), "--stages", "0", "--out", "id"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let cp_path = dir.path().join("id/checkpoint.json");
    let mut cp: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cp_path).unwrap()).unwrap();
    cp["state"]["alpha"] = serde_json::json!({"p": "1", "q": "5"});
    fs::write(&cp_path, serde_json::to_string(&cp).unwrap()).unwrap();
    let out = anokat(&["plotdata", "id/checkpoint.json", "orbit", "--out", "p", "--seeds", "1", "--k", "5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("p/orbit.csv"));
    assert_eq!(rows.len(), 5);
    let mut points: Vec<(String, String)> = rows.iter().map(|r| (r[2].clone(), r[3].clone())).collect();
    points.sort();
    points.dedup();
    assert_eq!(points.len(), 5);

    let out = anokat(&["plotdata", "r/checkpoint.json", "bicurve", "--out", "p", "--samples", "2000", "--stage", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("p/bicurve.csv"));
    // Count local maxima of the upper branch: one per oscillation.
    let upper: Vec<f64> = rows.iter().filter(|r| r[1] == "plus").map(|r| r[3].parse().unwrap()).collect();
    let peaks = (1..upper.len() - 1).filter(|&i| upper[i] > upper[i - 1] && upper[i] >= upper[i + 1]).count();
    let ledger: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r/ledger.json")).unwrap()).unwrap();
    let n = ledger["stages"][0]["report"]["shuffle"]["bicurve"]["N"].as_u64().unwrap();
    assert!((peaks as i64 - n as i64).abs() <= 1, "{peaks} peaks for N = {n}");

    let out = anokat(&["plotdata", "r/checkpoint.json", "ledger", "--out", "p"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("p/ledger_curves.csv"));
    let eps: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(eps.windows(2).all(|w| w[1] < w[0]));

    let out = anokat(&["plotdata", "r/checkpoint.json", "measure", "--out", "p", "--atoms", "32"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("p/measure.csv"));
    assert_eq!(rows.len(), 3 * 32);
}
