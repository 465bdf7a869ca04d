use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn whardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whardy")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn construct(dir: &Path, k: &str) -> PathBuf {
    let out = dir.join(format!("k{k}.json"));
    let o = whardy(&["construct", "--alpha", "1", "--delta", "0.5", "--K", k, "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn construct_writes_config_certificate_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = construct(dir.path(), "2");
    let config: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let starts: Vec<u64> = config["spike_starts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(config["K"], 2);
    assert!(starts[0] + 2 < starts[1]);

    let cert = fs::read_to_string(dir.path().join("k2.json.certificate.csv")).unwrap();
    let rows = csv_rows(&cert);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1], starts[1].to_string());
    assert!(cert.starts_with("k,N,constant,thr_value"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("k2.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "construct");
    let listed: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(listed.contains(&path_str(&out)));
    assert!(listed.iter().all(|p| Path::new(p).exists()));
}

#[test]
fn empty_construction_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = construct(dir.path(), "0");
    let report = dir.path().join("report.json");
    let o = whardy(&["verify", path_str(&out), "--epsilon", "0.1", "--out", path_str(&report)]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    for r in v["reports"].as_array().unwrap() {
        for c in r["conditions"].as_array().unwrap() {
            assert_eq!(c["pass"], true);
            for key in ["condition", "threshold", "measured", "argmax_r"] {
                assert!(c.get(key).is_some());
            }
        }
    }
}

#[test]
fn degenerate_delta_is_an_input_error() {
    let o = whardy(&["construct", "--alpha", "1", "--delta", "0", "--K", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let o = whardy(&["construct", "--alpha", "1", "--delta", "0.5", "--K", "9"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"alpha\": 1.0}").unwrap();
    assert_eq!(whardy(&["verify", path_str(&bad)]).status.code(), Some(3));
    fs::write(&bad, r#"{"alpha": 1.0, "delta": 0.5, "K": 2, "spike_starts": [3, 4]}"#).unwrap();
    assert_eq!(whardy(&["verify", path_str(&bad)]).status.code(), Some(3));
}

#[test]
fn failed_condition_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.json");
    fs::write(&cfg, r#"{"alpha": 1.0, "delta": 0.01, "K": 1, "spike_starts": [1]}"#).unwrap();
    let o = whardy(&["verify", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_truncation_exits_four() {
    let o = whardy(&["curvature", "--r", "0.99999999", "--tol", "1e-15"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lemma_table_decays() {
    let o = whardy(&["lemma", "--N", "10,100,1000"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 3);
    for col in 1..6 {
        let v: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
        assert!(v[0] > v[1] && v[1] > v[2], "column {col}: {v:?}");
    }
}

#[test]
fn unweighted_curvature_column() {
    let o = whardy(&["curvature", "--r", "0,0.5,0.9"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    let kappa_t: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    for (got, want) in kappa_t.iter().zip([1.0, 16.0 / 9.0, 1.0 / 0.19f64.powi(2)]) {
        assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
    }
    assert!((kappa_t[2] - 27.7008).abs() < 1e-4);
}

#[test]
fn orbit_and_weights_exports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = construct(dir.path(), "3");
    let o = whardy(&["orbit", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    let max = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!((max - 8.0).abs() < 1e-12);

    let o = whardy(&["weights", path_str(&cfg), "--from", "0", "--to", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[4][1], "4.0000000000000000e0");
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = construct(dir.path(), "2");
    let mut texts = Vec::new();
    for threads in ["1", "4", "4"] {
        let report = dir.path().join(format!("r{threads}_{}.json", texts.len()));
        let o = whardy(&["verify", path_str(&cfg), "--epsilon", "2", "--threads", threads, "--out", path_str(&report)]);
        assert_eq!(o.status.code(), Some(0));
        texts.push(fs::read(&report).unwrap());
    }
    assert!(texts.windows(2).all(|w| w[0] == w[1]));

    let a = whardy(&["orbit", path_str(&cfg), "--seed", "5"]);
    let b = whardy(&["orbit", path_str(&cfg), "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}
