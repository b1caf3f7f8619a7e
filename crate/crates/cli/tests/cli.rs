use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bnrisk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnrisk"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bnrisk(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Simulated dataset plus the generator model in `dir/sim`.
fn simulated(n: usize) -> TempDir {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["simulate", "--n", &n.to_string(), "--seed", "5", "--out", "sim"]);
    dir
}

#[test]
fn validate_exit_codes() {
    let dir = simulated(10);
    let d = dir.path();
    assert!(bnrisk(d, &["validate", "--model", "sim/generator.json"]).status.success());
    assert!(d.join("validate.manifest.json").exists());

    let cyclic = r#"{"variables": [
        {"name": "A", "states": ["0", "1"], "kind": "game"},
        {"name": "B", "states": ["0", "1"], "kind": "game"}],
      "edges": [["A", "B"], ["B", "A"]],
      "cpts": {"A": {"parents": ["B"], "rows": [[0.5, 0.5], [0.5, 0.5]]},
               "B": {"parents": ["A"], "rows": [[0.5, 0.5], [0.5, 0.5]]}}}"#;
    fs::write(d.join("cyclic.json"), cyclic).unwrap();
    let out = bnrisk(d, &["validate", "--model", "cyclic.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cycle") && err.contains("A -> B"), "{err}");

    fs::write(d.join("broken.json"), "{\n  \"variables\": [,\n}").unwrap();
    let out = bnrisk(d, &["validate", "--model", "broken.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(bnrisk(d, &["validate", "--model", "missing.json"]).status.code(), Some(1));
}

#[test]
fn empty_fit_returns_the_prior() {
    let dir = simulated(10);
    let d = dir.path();
    let header = read(d.join("sim/dataset.csv")).lines().next().unwrap().to_string();
    fs::write(d.join("empty.csv"), header + "\n").unwrap();
    ok(d, &["fit", "--data", "empty.csv", "--out", "fit"]);
    let model: serde_json::Value = serde_json::from_str(&read(d.join("fit/model.json"))).unwrap();
    let rows = model["cpts"]["Previous_CB_Offending"]["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r[0].as_f64() == Some(0.1)));
    let gender = &model["cpts"]["Gender"]["rows"][0];
    assert!(gender.as_array().unwrap().iter().all(|p| (p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn latent_fit_writes_a_monotone_trace() {
    let dir = simulated(1500);
    let d = dir.path();
    ok(d, &["fit", "--data", "sim/dataset.csv", "--latent", "Previous_CB_Offending", "--restarts", "3", "--seed", "2", "--out", "em"]);
    let trace = read(d.join("em/em_trace.csv"));
    let mut previous: Option<(usize, f64)> = None;
    for line in trace.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (r, obj): (usize, f64) = (f[0].parse().unwrap(), f[3].parse().unwrap());
        if let Some((pr, po)) = previous {
            if pr == r {
                assert!(obj >= po - 1e-6, "{po} -> {obj}");
            }
        }
        previous = Some((r, obj));
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(d.join("em/fit.manifest.json"))).unwrap();
    assert_eq!(manifest["seeds"]["em"], 2);
}

#[test]
fn strength_report_and_determinism() {
    let dir = simulated(10);
    let d = dir.path();
    ok(d, &["strength", "--model", "sim/generator.json", "--out", "s1"]);
    ok(d, &["strength", "--model", "sim/generator.json", "--out", "s2"]);
    let csv = read(d.join("s1/strength.csv"));
    assert_eq!(csv, read(d.join("s2/strength.csv")));
    assert_eq!(read(d.join("s1/strength.svg")), read(d.join("s2/strength.svg")));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let scores: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    let control = rows.iter().find(|r| r[1] == "A1Q1_PhotoSharing").unwrap();
    assert_eq!((control[2], control[3]), ("0.000000000000", "control"));
    assert!(read(d.join("s1/strength.svg")).contains("#d62728"));
}

#[test]
fn multifactor_curves_and_thresholds() {
    let dir = simulated(10);
    let d = dir.path();
    ok(d, &["multifactor", "--model", "sim/generator.json", "--k-max", "3", "--out", "mf"]);
    let csv = read(d.join("mf/multifactor.csv"));
    let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r[0].as_str(), r[1].as_str())).collect();
    assert_eq!(keys, [("game", "1"), ("game", "2"), ("game", "3"), ("profiling", "1"), ("profiling", "2"), ("profiling", "3")]);
    let svg = read(d.join("mf/multifactor.svg"));
    assert!(svg.contains("0.2600") && svg.contains("0.5263"), "threshold labels");

    // the k = 1 point is the best single conditional
    ok(d, &["profile", "--model", "sim/generator.json", "--source", "Previous_CB_Victimization", "--out", "pf"]);
    let best_single = read(d.join("pf/profile.csv"))
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(1).and_then(|p| p.parse::<f64>().ok()))
        .fold(0.0, f64::max);
    let profiling_k1: f64 = rows[3][2].parse().unwrap();
    assert!(profiling_k1 >= best_single - 1e-12);

    let out = bnrisk(d, &["multifactor", "--model", "sim/generator.json", "--max-evals", "10", "--out", "mf2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("combinations"));
}

#[test]
fn risk_profiles_report() {
    let dir = simulated(10);
    let d = dir.path();
    ok(d, &["profiles", "--model", "sim/generator.json", "--k", "3", "--out", "p"]);
    let freq = read(d.join("p/profile_frequencies.csv"));
    let first = freq.lines().nth(1).unwrap();
    assert!(first.starts_with("Previous_CB_Victimization,Yes,"), "{first}");
    let profiles = read(d.join("p/profiles.csv")).lines().count() - 1;
    let total: usize = freq.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 3 * profiles);

    ok(d, &["profiles", "--model", "sim/generator.json", "--k", "2", "--threshold", "1", "--out", "none"]);
    assert!(read(d.join("none/profiles.svg")).contains("no profiles"));
    assert_eq!(read(d.join("none/profile_frequencies.csv")).lines().count(), 1);
}

#[test]
fn compare_rankings() {
    let dir = simulated(10);
    let d = dir.path();
    ok(d, &["strength", "--model", "sim/generator.json", "--out", "s"]);
    let stdout = ok(d, &["compare", "s/strength.csv", "s/strength.csv", "--out", "c"]);
    assert!(stdout.contains("rho = 1.000000"), "{stdout}");

    fs::write(d.join("a.csv"), "variable,score\nx,1\ny,2\nz,3\n").unwrap();
    fs::write(d.join("b.csv"), "variable,score\nz,1\ny,2\nx,3\n").unwrap();
    ok(d, &["compare", "a.csv", "b.csv", "--out", "c"]);
    let result: serde_json::Value = serde_json::from_str(&read(d.join("c/compare.json"))).unwrap();
    assert_eq!(result["rho"].as_f64(), Some(-1.0));

    fs::write(d.join("c.csv"), "variable,score\nx,1\ny,2\nw,3\n").unwrap();
    let out = bnrisk(d, &["compare", "a.csv", "c.csv", "--out", "c"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("VariableSetMismatch"));
}

#[test]
fn simulate_is_seeded_and_replayable() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--n", "224", "--seed", "9", "--out", "a"]);
    ok(d, &["simulate", "--n", "224", "--seed", "9", "--out", "b"]);
    let a = read(d.join("a/dataset.csv"));
    assert_eq!(a, read(d.join("b/dataset.csv")));
    assert_eq!(a.lines().count(), 225);
    assert!(a.lines().next().unwrap().ends_with(",honesty"));

    // a generated seed is recorded and replays to the same file
    ok(d, &["simulate", "--n", "50", "--out", "c"]);
    ok(d, &["replay", "--manifest", "c/simulate.manifest.json", "--out", "r"]);
    assert_eq!(read(d.join("c/dataset.csv")), read(d.join("r/dataset.csv")));
    let m: serde_json::Value = serde_json::from_str(&read(d.join("r/simulate.manifest.json"))).unwrap();
    assert!(m["seeds"]["sample"].is_u64());
    assert_eq!(m["outputs"][0]["path"], "generator.json");
    assert_eq!(m["outputs"][1]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn summarize_and_filters() {
    let dir = simulated(400);
    let d = dir.path();
    ok(d, &["summarize", "--data", "sim/dataset.csv", "--out", "sum"]);
    let summary = read(d.join("sum/summary.csv"));
    assert!(summary.starts_with("variable,state,count,percentage\nGender,Male,"));

    ok(d, &["fit", "--data", "sim/dataset.csv", "--min-response-ms", "800", "--require-honesty", "--out", "f"]);
    let m: serde_json::Value = serde_json::from_str(&read(d.join("f/fit.manifest.json"))).unwrap();
    let report = &m["notes"]["filters"];
    assert_eq!(report["input_records"], 400);
    assert!(report["output_records"].as_u64().unwrap() < 400);

    fs::write(d.join("bad.csv"), "Gender,Age\nMale,99\n").unwrap();
    let out = bnrisk(d, &["summarize", "--data", "bad.csv", "--out", "sum"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
}
