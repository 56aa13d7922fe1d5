use std::path::Path;
use std::process::{Command, Output};

use odba_cli::{parse_config_str, run};
use serde_json::Value;

fn odba(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_odba"));
    cmd.args(args);
    match cache {
        Some(dir) => cmd.env("ODBA_CACHE_DIR", dir),
        None => cmd.env_remove("ODBA_CACHE_DIR"),
    };
    cmd.output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_report_has_schema_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = odba(
        &["verify", "--N", "2", "--p", "2", "--q", "3", "--xi", "0.5", "--theta", "0.2,-0.4", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    for key in ["config", "results", "failures", "timing", "version"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["failures"].as_array().unwrap().len(), 0);
    assert_eq!(r["results"]["summary"]["passed"], r["results"]["summary"]["total"]);
    // complex numbers as [re, im]
    let pt = &r["results"]["identities"][0]["points"][0];
    assert_eq!(pt.as_array().unwrap().len(), 2);
    let side = read_json(&dir.path().join("v.json.timing.json"));
    assert!(side["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn embedded_config_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = odba(&["solve-bae", "--N", "1", "--p", "1.3", "--q", "2.1", "--xi", "0.5", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read_to_string(&out).unwrap();
    let first = read_json(&out);
    assert_eq!(first["results"]["spectrum_match"]["matched_fraction"], 1.0);

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, first["config"].to_string()).unwrap();
    let o = odba(&["solve-bae", "--config", cfg.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&out).unwrap() == bytes);
}

#[test]
fn config_errors_exit_with_field_names() {
    let o = odba(&["verify", "--N", "2", "--p", "2", "--q", "3", "--xi", "0.5", "--theta", "0.2,-0.4,0.1"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta"));

    let o = odba(&["verify", "--N", "2", "--p", "2", "--q", "3", "--xi", "0.5", "--theta", "0.5,0.1"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pole rule"));
}

#[test]
fn under_seeded_solve_fails_with_structured_list() {
    let o = odba(&["solve-bae", "--N", "2", "--p", "1.3", "--q", "2.1", "--xi", "0.5", "--M", "sweep", "--seeds", "1"], None);
    assert_eq!(o.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let failures = r["failures"].as_array().unwrap();
    assert!(failures.iter().any(|f| f["stage"] == "spectrum_match"
        && f["message"].as_str().unwrap().starts_with("completeness unconfirmed")));
}

#[test]
fn csv_export_flattens_table() {
    let o = odba(&["spectrum", "--N", "2", "--p", "1.3", "--q", "2.1", "--xi", "0.5", "--format", "csv"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("index,degree,crossing"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn cache_hit_returns_same_bytes() {
    let cache = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.json");
    let args = ["solve-functional", "--N", "1", "--p", "1.3", "--q", "2.1", "--xi", "0.5", "--theta", "0.3", "--out", out.to_str().unwrap()];
    assert!(odba(&args, Some(cache.path())).status.success());
    let first = std::fs::read_to_string(&out).unwrap();
    let entries: Vec<_> = std::fs::read_dir(cache.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
    assert!(!read_json(&dir.path().join("f.json.timing.json"))["cache_hit"].as_bool().unwrap());

    assert!(odba(&args, Some(cache.path())).status.success());
    assert!(std::fs::read_to_string(&out).unwrap() == first, "cached report differs");
    assert!(read_json(&dir.path().join("f.json.timing.json"))["cache_hit"].as_bool().unwrap());
}

#[test]
fn run_is_deterministic_in_process() {
    let cfg = parse_config_str(r#"{"command":"solve-functional","N":2,"p":1.3,"q":2.1,"xi":0.5,"theta":[0.3,-0.2],"seed_count":100}"#)
        .unwrap();
    let (a, _) = run(&cfg);
    let (b, _) = run(&cfg);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.passed(), "{:?}", a.failures);
}
