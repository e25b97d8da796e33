use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios")
}

fn patro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patro")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const LOGLINEAR: &str = r#"
seed = 7
[model]
kind = "pricing_loglinear"
a = 1.0
b = 1.0
[prior]
m0 = 0.0
v0 = 5.0
[design]
n = 10
gamma = 1.0
[noise]
sigma_eps = 2.0
"#;

#[test]
fn adjust_rollout_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "ll.toml", LOGLINEAR);
    let doc = json(&patro(&["adjust", "--config", cfg.to_str().unwrap(), "--mode", "rollout"]));
    let row = &doc["results"][0];
    assert!((row["delta_r"].as_f64().unwrap() - 0.606_060_606_060_606).abs() < 1e-9);
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["config"]["model"]["kind"], "pricing_loglinear");
}

#[test]
fn adjust_linear_pricing_is_neutral_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "lin.toml", &LOGLINEAR.replace("pricing_loglinear", "pricing_linear"));
    let doc = json(&patro(&["adjust", "--config", cfg.to_str().unwrap(), "--mode", "dual"]));
    let row = &doc["results"][0];
    assert_eq!(row["delta_r"].as_f64().unwrap().abs(), 0.0);
    assert_eq!(row["delta_o"].as_f64().unwrap().abs(), 0.0);
    assert_eq!(row["interaction"], "neutral");
}

#[test]
fn adjust_newsvendor_substitutes() {
    let cfg = scenarios().join("newsvendor_cr011_v1_s1.toml");
    let doc = json(&patro(&["adjust", "--config", cfg.to_str().unwrap()]));
    for row in doc["results"].as_array().unwrap() {
        assert_eq!(row["interaction"], "substitutes");
        let (r, single) = (row["delta_r"].as_f64().unwrap(), row["single_r"].as_f64().unwrap());
        assert!(single < r && r < 0.0);
        assert!(row["converged"].as_bool().unwrap());
    }
}

#[test]
fn table1_csv_layout_and_shape() {
    let out = patro(&["table1"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().clone();
    for col in ["scenario", "n", "improvement_pct", "reference_pct", "abs_deviation", "parameter_ambiguous"] {
        assert!(header.iter().any(|h| h == col), "missing {col}");
    }
    let idx = |c: &str| header.iter().position(|h| h == c).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 45);
    for chunk in rows.chunks(5) {
        let rates: Vec<f64> = chunk.iter().map(|r| r[idx("improvement_pct")].parse().unwrap()).collect();
        assert!(rates.iter().all(|r| (0.0..100.0).contains(r)));
        assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
    }
    let service = rows.iter().find(|r| &r[idx("scenario")] == "service_a1_v1_s1").unwrap();
    let rate: f64 = service[idx("improvement_pct")].parse().unwrap();
    assert!((rate - 5.1897).abs() < 0.05);
    let last = rows.last().unwrap();
    assert_eq!(&last[idx("n")], "90");
    let rate: f64 = last[idx("improvement_pct")].parse().unwrap();
    assert!((rate - 4.2667).abs() < 0.05);
}

#[test]
fn table1_rows_and_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["service_a1_v1_s1", "pricing_a1_v2_s1"] {
        std::fs::copy(scenarios().join(format!("{name}.toml")), dir.path().join(format!("{name}.toml"))).unwrap();
    }
    let out_path = dir.path().join("t.json");
    let out = patro(&[
        "table1",
        "--config",
        dir.path().to_str().unwrap(),
        "--rows",
        "service_a1_v1_s1",
        "--format",
        "json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 5);
    assert!(results.iter().all(|r| r["scenario"] == "service_a1_v1_s1"));
    assert_eq!(patro(&["table1", "--rows", "12"]).status.code(), Some(1));
}

#[test]
fn sweep_reports_inverse_rate() {
    let cfg = scenarios().join("service_a1_v1_s1.toml");
    let out = patro(&["sweep", "--config", cfg.to_str().unwrap(), "--n-list", "100,300,1000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for col in ["slope_delta_r", "slope_delta_o_dual"] {
        let slope: f64 = rows[0][header.iter().position(|h| h == col).unwrap()].parse().unwrap();
        assert!((slope + 1.0).abs() < 0.1, "{col} = {slope}");
    }
}

#[test]
fn validate_reports_all_clauses() {
    let cfg = scenarios().join("service_a1_v1_s1.toml");
    let doc = json(&patro(&["validate", "--config", cfg.to_str().unwrap()]));
    assert_eq!(doc["passed"], true);
    let report = &doc["results"][0]["report"];
    let clauses: Vec<&str> = report["clauses"].as_array().unwrap().iter().map(|c| c["clause"].as_str().unwrap()).collect();
    assert_eq!(clauses, ["i", "ii", "iii", "iv", "v-a", "v-b", "C1", "C2"]);
    assert!(report["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("Pi^(1,2)")));
}

#[test]
fn benchmark_ordering_and_gaps() {
    let cfg = scenarios().join("service_a1_v4_s2.toml");
    let doc = json(&patro(&["benchmark", "--config", cfg.to_str().unwrap()]));
    for row in doc["results"].as_array().unwrap() {
        let g = |k: &str| row[k].as_f64().unwrap();
        let tie = 1e-9 * g("n");
        assert!(g("regret_bayes") <= g("regret_dual") + tie);
        assert!(g("regret_dual") <= g("regret_single_r") + tie);
        assert!(g("regret_single_r") <= g("regret_pto") + tie);
        assert!((0.0 - 1e-9..=1e-2).contains(&g("gap_dual_pct")));
    }
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let cfg = scenarios().join("newsvendor_cr011_v1_s1.toml");
    let c = cfg.to_str().unwrap();
    let a = patro(&["simulate", "--config", c, "--replications", "5000", "--seed", "11"]);
    let b = patro(&["simulate", "--config", c, "--replications", "5000", "--seed", "11"]);
    let other = patro(&["simulate", "--config", c, "--replications", "5000", "--seed", "12"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, other.stdout);
    let doc = json(&a);
    assert_eq!(doc["config"]["seed"], 11);
    assert_eq!(doc["results"][0]["replications"], 5000);
    assert_eq!(patro(&["simulate", "--config", c, "--replications", "10"]).status.code(), Some(1));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(&dir, "u.toml", &format!("{LOGLINEAR}\n[extra]\nx = 1\n"));
    assert_eq!(patro(&["adjust", "--config", unknown.to_str().unwrap()]).status.code(), Some(1));
    let bad = write_config(&dir, "b.toml", &LOGLINEAR.replace("v0 = 5.0", "v0 = -5.0"));
    let out = patro(&["adjust", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
    assert_eq!(patro(&["adjust"]).status.code(), Some(1));
    assert_eq!(patro(&["adjust", "--config", "/nonexistent/x.toml"]).status.code(), Some(1));
    assert_eq!(patro(&["adjust", "--config", unknown.to_str().unwrap(), "--format", "xml"]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("service_a1_v1_s1.toml")).unwrap();
    let capped = write_config(&dir, "s.toml", &format!("{text}\n[solver]\nmax_alt_iters = 1\n"));
    let out = patro(&["adjust", "--config", capped.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["results"][0]["converged"], false);
}
