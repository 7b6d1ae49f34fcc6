use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn trajfda(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajfda"))
        .current_dir(dir)
        .args(args)
        .env_remove("TRAJFDA_THREADS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = trajfda(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Model 2 ensemble with its four contaminating curves, written into `dir`.
fn model2_csv(dir: &Path) -> PathBuf {
    ok(dir, &["simulate", "--model", "m2", "--seed", "7", "--contaminate", "--out", "m2.csv"]);
    dir.join("m2.csv")
}

#[test]
fn help_and_version_succeed() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&trajfda(dir.path(), &["--help"])), 0);
    assert_eq!(code(&trajfda(dir.path(), &["--version"])), 0);
    assert_eq!(code(&trajfda(dir.path(), &["detect", "--help"])), 0);
}

#[test]
fn usage_and_validation_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    model2_csv(dir.path());
    for args in [
        vec!["rank"],
        vec!["frobnicate"],
        vec!["rank", "--input", "m2.csv", "--bogus"],
        vec!["rank", "--input", "missing.csv"],
        vec!["rank", "--input", "m2.csv", "--directions", "3"],
        vec!["rank", "--input", "m2.csv", "--band-levels", "50,25,75"],
        vec!["detect", "--input", "m2.csv", "--alpha", "0.9,0.95"],
        vec!["simulate", "--model", "m9"],
    ] {
        let out = trajfda(dir.path(), &args);
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    std::fs::write(dir.path().join("bad.conf"), "alpha = 0.9\nnot-a-key = 3\n").unwrap();
    let out = trajfda(dir.path(), &["--config", "bad.conf", "rank", "--input", "m2.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn numerical_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    model2_csv(dir.path());
    // Clean Model 2 curves coincide at the first grid point.
    let out = trajfda(dir.path(), &["detect", "--input", "m2.csv", "--method", "projection"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn unaligned_grids_get_an_ingest_hint() {
    let dir = TempDir::new().unwrap();
    let csv = "id,t,x,y\na,0,0,0\na,1,1,1\na,2,2,2\nb,0,0,1\nb,1.5,1,2\nb,2,2,3\n";
    std::fs::write(dir.path().join("raw.csv"), csv).unwrap();
    let out = trajfda(dir.path(), &["rank", "--input", "raw.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
}

#[test]
fn simulate_writes_ensemble_and_labels() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["simulate", "--model", "m2", "--seed", "7", "--contaminate"]);
    let labels = std::fs::read_to_string(dir.path().join("model2_seed7.labels.csv")).unwrap();
    assert_eq!(labels.lines().filter(|l| l.ends_with(",outlier")).count(), 4);
    let csv = std::fs::read(dir.path().join("model2_seed7.csv")).unwrap();
    ok(dir.path(), &["simulate", "--model", "m2", "--seed", "7", "--contaminate", "--out", "again.csv"]);
    assert_eq!(std::fs::read(dir.path().join("again.csv")).unwrap(), csv);
}

#[test]
fn rank_writes_json_to_stdout() {
    let dir = TempDir::new().unwrap();
    model2_csv(dir.path());
    let out = ok(dir.path(), &["rank", "--input", "m2.csv"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ranking = v["ranking"].as_array().unwrap();
    assert_eq!(ranking[0]["rank"], 1);
    let depths: Vec<f64> = ranking.iter().map(|r| r["msbd"].as_f64().unwrap()).collect();
    assert!(depths.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(v["bands"]["median_id"], ranking[0]["curve_id"]);
}

fn outlier_polylines(svg: &str) -> usize {
    match svg.find("<g id=\"outlier\"") {
        Some(start) => {
            let group = &svg[start..start + svg[start..].find("</g>").unwrap()];
            group.matches("<polyline").count()
        }
        None => 0,
    }
}

#[test]
fn alpha_batch_counts_are_nonincreasing() {
    let dir = TempDir::new().unwrap();
    model2_csv(dir.path());
    let alphas = ["0.6", "0.9", "0.975", "0.999"];
    let batch = alphas.join(",");
    let maha = ["--method", "mahalanobis", "--alpha", batch.as_str()];
    ok(dir.path(), &[&["boxplot", "--input", "m2.csv", "--out", "bp.svg"][..], &maha].concat());
    let counts: Vec<usize> = alphas
        .iter()
        .map(|a| outlier_polylines(&std::fs::read_to_string(dir.path().join(format!("bp_alpha{a}.svg"))).unwrap()))
        .collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
    assert!(counts[2] >= 4, "{counts:?}");

    ok(dir.path(), &[&["detect", "--input", "m2.csv", "--out", "det.json"][..], &maha].concat());
    let flagged: Vec<usize> = alphas
        .iter()
        .map(|a| {
            let text = std::fs::read_to_string(dir.path().join(format!("det_alpha{a}.json"))).unwrap();
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["config"]["alpha"][0].as_f64().unwrap(), a.parse::<f64>().unwrap());
            v["bands"]["outlier_ids"].as_array().unwrap().len()
        })
        .collect();
    assert_eq!(flagged, counts);
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    model2_csv(dir.path());
    std::fs::write(dir.path().join("run.conf"), "# levels for this run\nband-levels = 10,40,90\nmsbd-seed = 3\n").unwrap();
    let levels = |args: &[&str]| -> Vec<String> {
        let v: serde_json::Value = serde_json::from_slice(&ok(dir.path(), args).stdout).unwrap();
        v["bands"]["levels"].as_object().unwrap().keys().cloned().collect()
    };
    assert_eq!(levels(&["--config", "run.conf", "rank", "--input", "m2.csv"]), ["10", "40", "90"]);
    assert_eq!(
        levels(&["--config", "run.conf", "rank", "--input", "m2.csv", "--band-levels", "20,50,80"]),
        ["20", "50", "80"]
    );
}

#[test]
fn msbdwo_format_follows_extension() {
    let dir = TempDir::new().unwrap();
    model2_csv(dir.path());
    ok(dir.path(), &["msbdwo", "--input", "m2.csv", "--out", "s.svg", "--method", "mahalanobis"]);
    ok(dir.path(), &["msbdwo", "--input", "m2.csv", "--out", "s.json", "--method", "mahalanobis"]);
    assert!(std::fs::read_to_string(dir.path().join("s.svg")).unwrap().starts_with("<svg"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.iter().filter(|p| p["category"] == "outlier").count(), 4);
}

#[test]
fn ingest_then_rank() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("id,t,lon,lat\n");
    for c in 0..6 {
        let n = 40 + 7 * c;
        for i in 0..n {
            let t = c as f64 * 0.01 + i as f64 / n as f64;
            csv.push_str(&format!("track{c},{t},{},{}\n", 2.0 * t + c as f64 * 0.1, (3.0 * t).sin() * (1.0 + 0.1 * c as f64)));
        }
    }
    std::fs::write(dir.path().join("raw.csv"), csv).unwrap();
    ok(dir.path(), &["ingest", "--input", "raw.csv", "--out", "grid.csv", "--target-k", "60", "--align", "common-start"]);
    let grid = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert!(grid.starts_with("id,t,lon,lat\n"));
    assert_eq!(grid.lines().count(), 1 + 6 * 60);
    ok(dir.path(), &["rank", "--input", "grid.csv"]);
}

#[test]
fn benchmark_prints_a_rates_table() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &["benchmark", "--model", "m2", "--replicates", "3", "--seed", "1", "--out", "b.json", "--mcd-starts", "50"],
    );
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("model2  k=100  replicates=3  method=mahalanobis"));
    for rule in ["RMD", "MSBD", "WO"] {
        assert!(table.lines().any(|l| l.starts_with(rule)), "{table}");
    }
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    assert_eq!(v["k"], 100);
}
