use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tomocal_cli::Summary;

fn tomocal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomocal"))
        .args(args)
        .current_dir(dir)
        .env_remove("TOMOCAL_THREADS")
        .output()
        .expect("tomocal starts")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn without_timestamp(json: &str) -> String {
    json.lines().filter(|l| !l.trim_start().starts_with("\"timestamp\"")).collect::<Vec<_>>().join("\n")
}

const LANDSCAPE_21: &str = r#"{
  "schemaVersion": "1",
  "scenario": "landscape",
  "truthParams": [0.02, -0.04],
  "landscape": {
    "probes": [{ "kind": "cube8" }, { "kind": "latlon", "n": 14 }],
    "axes": [
      { "param": "delta", "min": -0.1, "max": 0.1, "n": 21 },
      { "param": "epsilon", "min": -0.1, "max": 0.1, "n": 21 }
    ]
  }
}"#;

const POLARIMETER: &str = r#"{ "schemaVersion": "1", "scenario": "polarimeter" }"#;

#[test]
fn landscape_csv_has_one_row_per_node() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "l.json", LANDSCAPE_21);
    let out = tmp.path().join("out");
    let o = tomocal(&["landscape", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("landscape.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta,epsilon,delta_p_cube8,delta_p_latlon14");
    assert_eq!(lines.len(), 1 + 441);
    assert!(out.join("landscape_cube8.svg").exists());
    assert!(out.join("landscape_latlon14.svg").exists());
}

#[test]
fn summary_round_trips_and_has_schema_version() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.json", POLARIMETER);
    let out = tmp.path().join("out");
    let o = tomocal(&["polarimeter", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("summary.json")).unwrap();
    let summary = Summary::load(&out.join("summary.json")).unwrap();
    assert_eq!(summary.schema_version, "1");
    assert_eq!(summary.to_json().unwrap(), text);
    for f in &summary.files {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn summary_is_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "l.json", LANDSCAPE_21);
    let mut jsons = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("t{threads}"));
        let o = tomocal(
            &["run", cfg.to_str().unwrap(), "--threads", threads, "--no-figures", "--out", out.to_str().unwrap()],
            tmp.path(),
        );
        assert!(o.status.success());
        jsons.push(without_timestamp(&fs::read_to_string(out.join("summary.json")).unwrap()));
    }
    assert_eq!(jsons[0], jsons[1]);
}

#[test]
fn no_figures_skips_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.json", POLARIMETER);
    let out = tmp.path().join("out");
    let o = tomocal(&["run", cfg.to_str().unwrap(), "--no-figures", "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success());
    let names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.ends_with(".svg")), "{names:?}");
    assert!(names.contains(&"polarimeter.csv".to_string()));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(
        tmp.path(),
        "u.json",
        r#"{ "schemaVersion": "1", "scenario": "polarimeter", "colour": "blue" }"#,
    );
    let version = write_config(tmp.path(), "v.json", r#"{ "schemaVersion": "2", "scenario": "polarimeter" }"#);
    let polar = write_config(tmp.path(), "p.json", POLARIMETER);
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", unknown.to_str().unwrap()],
        vec!["run", version.to_str().unwrap()],
        vec!["run", "missing.json"],
        vec!["chip", polar.to_str().unwrap()],
        vec!["landscape", polar.to_str().unwrap()],
    ];
    for args in cases {
        let o = tomocal(&args, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = tomocal(&["run", unknown.to_str().unwrap()], tmp.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn zero_threads_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.json", POLARIMETER);
    let o = Command::new(env!("CARGO_BIN_EXE_tomocal"))
        .args(["run", cfg.to_str().unwrap(), "--no-figures"])
        .current_dir(tmp.path())
        .env("TOMOCAL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_tomocal"))
        .args(["run", cfg.to_str().unwrap(), "--no-figures"])
        .current_dir(tmp.path())
        .env("TOMOCAL_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn unwritable_output_reports_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.json", POLARIMETER);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("out");
    let o = tomocal(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(out.to_str().unwrap()));
}

#[test]
fn study_maps_have_one_mark_per_test_state() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.json",
        r#"{
  "schemaVersion": "1",
  "scenario": "additive_study",
  "probe": { "kind": "fibonacci", "n": 30 },
  "testProbe": { "kind": "fibonacci", "n": 40 },
  "truthDistribution": { "kind": "normal", "sigmaDeg": 5.0 },
  "trials": 2,
  "seed": 11,
  "optimizer": { "lhSamples": 200, "maxEvaluations": 4000 }
}"#,
    );
    let out = tmp.path().join("out");
    let o = tomocal(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for stage in ["before", "after"] {
        let svg = fs::read_to_string(out.join(format!("purity_{stage}.svg"))).unwrap();
        assert_eq!(svg.matches(r#"class="state""#).count(), 40, "{stage}");
        assert_eq!(svg.matches(r#"class="target""#).count(), 40, "{stage}");
    }
    let csv = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let summary = Summary::load(&out.join("summary.json")).unwrap();
    assert_eq!(summary.total_trials, 2);
    assert_eq!(summary.failed_trials, 0);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = tomocal_cli::ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 7, "{n} configs");
}
