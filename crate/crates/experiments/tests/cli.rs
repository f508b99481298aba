use std::path::Path;

use ehcr_experiments::{manifest_path, run_cli};
use serde_json::Value;

fn run(args: &[&str]) -> anyhow::Result<std::path::PathBuf> {
    run_cli(std::iter::once("ehcr").chain(args.iter().copied()))
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(manifest_path(out)).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[i].parse().unwrap()).collect()
}

#[test]
fn eta_sweep_example_has_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = out.to_str().unwrap();
    run(&["eta-sweep", "--seed", "7", "--k", "2", "--n", "4", "--eta", "0:0.1:2", "--out", o]).unwrap();
    let header = csv::Reader::from_path(&out).unwrap().headers().unwrap().clone();
    assert_eq!(&header.iter().take(5).collect::<Vec<_>>(), &["eta", "K", "N", "seed", "rate_0"]);
    assert_eq!(rows(&out).len(), 21);
    for u in 0..2 {
        let rate = column(&out, &format!("rate_{u}"));
        assert!(rate.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    }
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["rows"], 21);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn instant_vs_oracle_example_gaps_are_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gap.csv");
    run(&["instant-vs-oracle", "--seed", "1..20", "--k", "2", "--n", "4", "--out", out.to_str().unwrap()]).unwrap();
    let mut gaps = column(&out, "gap_pct");
    assert_eq!(gaps.len(), 20);
    assert!(gaps.iter().all(|g| g.is_finite()));
    gaps.sort_by(f64::total_cmp);
    assert!(0.5 * (gaps[9] + gaps[10]) <= 10.0);
}

#[test]
fn timing_example_favours_the_heuristic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    run(&["timing", "--k", "2", "--n", "8", "--out", out.to_str().unwrap()]).unwrap();
    let (i, o) = (column(&out, "instant_s"), column(&out, "oracle_s"));
    assert!(i[0] < o[0]);
}

#[test]
fn oversized_oracle_requests_fail_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("big.csv");
    let err = run(&["instant-vs-oracle", "--k", "4", "--n", "12", "--out", out.to_str().unwrap()]).unwrap_err();
    assert!(err.to_string().contains("exceeds the cap"));
    assert!(!out.exists());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(run(&["eta-sweep", "--k", "2,3"]).is_err());
    assert!(run(&["eta-sweep", "--eta", "1:0:2"]).is_err());
    assert!(run(&["simulate", "--slots", "0"]).is_err());
    assert!(run(&["kn-scaling", "--seed", "5..1"]).is_err());
    assert!(run(&["instant-vs-oracle", "--k", "4", "--n", "3", "--strict-oracle"]).is_err());
    assert!(run(&["eta-sweep", "--params", "{\"harvest_rate_range\": [0.5, 0.1]}"]).is_err());
}

#[test]
fn kn_scaling_skips_oversized_oracle_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kn.csv");
    let o = out.to_str().unwrap();
    run(&["kn-scaling", "--seed", "1,2", "--k", "2,4", "--n", "4,12", "--solver", "oracle", "--out", o]).unwrap();
    // 4^12 is above the cap; the other three sizes run
    assert_eq!(rows(&out).len(), 6);
    let m = manifest(&out);
    assert_eq!(m["skipped"].as_array().unwrap().len(), 2);
}

#[test]
fn infeasible_runs_flush_rows_and_mark_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inf.csv");
    let o = out.to_str().unwrap();
    let err = run(&["kn-scaling", "--seed", "1..3", "--k", "2", "--n", "3", "--min-rate-coeff", "1000", "--out", o]);
    assert!(err.unwrap_err().to_string().contains("infeasible"));
    assert_eq!(rows(&out).len(), 3);
    let m = manifest(&out);
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("infeasible"));

    // the surface treats infeasible points as data
    let out = dir.path().join("surface.csv");
    let o = out.to_str().unwrap();
    run(&["minrate-eta-surface", "--min-rate-coeff", "0.1,1000", "--eta", "0", "--out", o]).unwrap();
    let feasible: Vec<String> = rows(&out).iter().map(|r| r[8].to_string()).collect();
    assert_eq!(feasible, ["true", "false"]);
}

#[test]
fn replaying_a_manifest_reproduces_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let again = dir.path().join("b.json");
    run(&["simulate", "--seed", "4", "--k", "3", "--n", "5", "--slots", "12", "--out", first.to_str().unwrap()])
        .unwrap();
    run(&["replay", manifest_path(&first).to_str().unwrap(), "--out", again.to_str().unwrap()]).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&again).unwrap());
    let rows: Value = serde_json::from_slice(&std::fs::read(&first).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3 * 12);
}

#[test]
fn scenario_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    let s = scen.to_str().unwrap();
    run(&["generate", "--seed", "9", "--k", "2", "--n", "5", "--m", "2", "--out", s]).unwrap();
    let generated = ehcr_core::generate_scenario(9, 2, 5, 2, &ehcr_core::ScenarioParams::default()).unwrap();
    let text = std::fs::read_to_string(&scen).unwrap();
    assert_eq!(ehcr_core::Scenario::from_json(&text).unwrap(), generated);

    let a = dir.path().join("from_file.csv");
    let b = dir.path().join("from_seed.csv");
    run(&["eta-sweep", "--scenario-file", s, "--eta", "0,1e9", "--out", a.to_str().unwrap()]).unwrap();
    run(&["eta-sweep", "--seed", "9", "--m", "2", "--n", "5", "--eta", "0,1e9", "--out", b.to_str().unwrap()]).unwrap();
    // same instance, different seed label in the key column
    assert_eq!(column(&a, "total"), column(&b, "total"));
    assert!(manifest(&a)["spec"]["scenario"].is_object());
}

#[test]
fn format_follows_the_extension_and_json_has_row_objects() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("surface.json");
    run(&["minrate-eta-surface", "--min-rate-coeff", "0.1,0.2", "--eta", "0,1e9", "--out", out.to_str().unwrap()])
        .unwrap();
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1]["eta"], 1e9);
    assert_eq!(rows[2]["min_rate_coeff"], 0.2);
    assert!(run(&["eta-sweep", "--out", out.to_str().unwrap(), "--format", "csv"]).is_err());
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    // the only test that touches the variable
    std::env::set_var(ehcr_experiments::spec::OUT_DIR_VAR, dir.path());
    let out = run(&["generate", "--k", "1", "--n", "2"]).unwrap();
    std::env::remove_var(ehcr_experiments::spec::OUT_DIR_VAR);
    assert_eq!(out, dir.path().join("generate.json"));
    assert!(manifest_path(&out).exists());
}
