use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rsosim");

fn rsosim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(|r| r.unwrap()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.headers().unwrap().iter().map(String::from).collect()
}

fn repo_config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn type1_matrix_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1.csv");
    let status = rsosim(&[
        "run",
        "--config",
        &repo_config("type1_matrix.toml"),
        "--reps",
        "60",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(header(&out), rsosim_cli::output::CSV_HEADER);
    let rows = rows(&out);
    let count = |phase: &str| rows.iter().filter(|r| &r[8] == "type1_rate" && &r[7] == phase).count();
    assert_eq!(count("before") + count("after"), 48);
    assert_eq!(count("baseline"), 24);
    for r in &rows {
        assert_eq!(&r[12] == "60", &r[8] == "type1_rate");
        if !r[10].is_empty() {
            let (v, lo, hi): (f64, f64, f64) = (r[9].parse().unwrap(), r[10].parse().unwrap(), r[11].parse().unwrap());
            assert!(lo <= v && v <= hi, "{r:?}");
        }
        assert!(!r[9].contains('e'), "decimal notation: {r:?}");
    }
}

#[test]
fn same_seed_same_bytes_and_manifest_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        r#"
[[experiment]]
kind = "type1"
n = [8, 20]
methods = ["iqr", "grubbs"]
tests = ["ttest", "permutation:200"]
reps = 150

[[experiment]]
kind = "contam_type2"
n = [20]
methods = ["mad"]
reps = 400
"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = rsosim(&["run", "--config", cfg.to_str().unwrap(), "--seed", "99", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 99);
    assert_eq!(manifest["status"], "complete");
    let replay_cfg = write(dir.path(), "replay.toml", manifest["config_toml"].as_str().unwrap());
    let c = dir.path().join("c.csv");
    let o = rsosim(&["run", "--config", replay_cfg.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(bytes, std::fs::read(&c).unwrap());
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[[experiment]]\nkind = \"type1\"\nn = [10]\nmethods = [\"iqr\", \"tukey\"]\n",
    );
    let o = rsosim(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment[0].methods[1]"));

    assert_eq!(rsosim(&["run"]).status.code(), Some(2));
    assert_eq!(rsosim(&["run", "--experiment", "nope"]).status.code(), Some(2));
    assert_eq!(rsosim(&["run", "--experiment", "type1", "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(rsosim(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_3_with_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[[experiment]]\nkind = \"type1\"\ndistributions = [\"normal\"]\nn = [11]\nmethods = [\"sigma3\", \"sigma2\"]\nreps = 30\nmax_draws = 3000\n",
    );
    let out = dir.path().join("p.csv");
    let o = rsosim(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let rows = rows(&out);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[2] == "sigma2"));
    let manifest = std::fs::read_to_string(dir.path().join("p.manifest.json")).unwrap();
    assert!(manifest.contains("\"incomplete\""));
    assert!(manifest.contains("\"attempts\": 3000"));
}

#[test]
fn listings() {
    let o = rsosim(&["list-methods"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let (methods, tests) = text.split_once("tests:\n").unwrap();
    let ids = |block: &str| {
        block
            .lines()
            .filter(|l| l.starts_with("  ") && !l.trim_start().starts_with("parameters"))
            .count()
    };
    assert_eq!(ids(methods), 7);
    assert_eq!(ids(tests), 3);
    assert_eq!(text, String::from_utf8(rsosim(&["list-methods"]).stdout).unwrap());

    let o = rsosim(&["list-experiments"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 10);
}

#[test]
fn example_output() {
    let o = rsosim(&["example", "--method", "sigma3", "--n", "8", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let ex: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for s in ex["samples"].as_array().unwrap() {
        assert_eq!(s["values"], s["corrected"]);
    }
    for t in ex["tests"].as_array().unwrap() {
        assert_eq!(t["p_before"], t["p_after"]);
    }

    let o = rsosim(&["example", "--method", "sigma2", "--n", "6", "--scan", "3000"]);
    assert_eq!(o.status.code(), Some(0));
    let ex: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let flips = ex["tests"]
        .as_array()
        .unwrap()
        .iter()
        .any(|t| t["p_before"].as_f64().unwrap() >= 0.05 && t["p_after"].as_f64().unwrap() < 0.05);
    assert!(flips);

    assert_eq!(rsosim(&["example", "--method", "sigma9"]).status.code(), Some(2));
}

#[test]
fn calibrate_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.csv");
    let o = rsosim(&["calibrate", "--reps", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("10000"));
    assert_eq!(rows(&out).len(), 6 * 3);
}
