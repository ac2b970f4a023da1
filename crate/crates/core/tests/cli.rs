//! End-to-end runs of the `wiggly` binary in scratch directories.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use wiggly::cli::to_json_text;

fn wiggly(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wiggly"))
        .args(args)
        .current_dir(dir)
        .env_remove("WIGGLY_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = wiggly(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_of(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_values(path: &Path) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "value").unwrap();
    rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect()
}

#[test]
fn segment_profile_is_all_zero() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gen", "--fractal", "segment", "--resolution", "101", "--out", "s.json"]);
    ok(d.path(), &["beta", "--in", "s.json", "--kinds", "hat,prime", "--out", "b.csv"]);
    let values = csv_values(&d.path().join("b.csv"));
    assert!(!values.is_empty());
    assert!(values.iter().all(|&v| v == 0.0), "{values:?}");
    let side = read_json(&d.path().join("b.csv.provenance.json"));
    assert_eq!(side["provenance"]["command"], "beta");
    assert_eq!(side["provenance"]["config"]["kinds"], "hat,prime");
    assert_eq!(side["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn json_outputs_round_trip_byte_for_byte() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gen", "--fractal", "antenna", "--depth", "3", "--out", "a.json"]);
    ok(d.path(), &["nets", "--in", "a.json", "--out", "n.json"]);
    ok(d.path(), &["cubes", "--in", "a.json", "--n-max", "3", "--out", "c.json"]);
    ok(d.path(), &["dim", "--in", "a.json", "--out", "d.json"]);
    ok(d.path(), &["tst", "--in", "a.json", "--n-max", "3", "--out", "t.csv"]);
    for f in ["a.json", "n.json", "c.json", "d.json", "t.csv.provenance.json"] {
        let text = fs::read_to_string(d.path().join(f)).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(to_json_text(&v), text, "{f} changed on re-serialization");
    }
}

#[test]
fn identical_settings_give_identical_bytes_across_threads_and_directories() {
    let runs: Vec<TempDir> = (0..3).map(|_| TempDir::new().unwrap()).collect();
    for (k, d) in runs.iter().enumerate() {
        let threads = ["1", "2", "4"][k];
        ok(d.path(), &["gen", "--fractal", "zigzag", "--depth", "6", "--out", "z.json"]);
        ok(d.path(), &["--threads", threads, "beta", "--in", "z.json", "--n-max", "3", "--out", "b.csv"]);
        ok(d.path(), &["--threads", threads, "tree", "--in", "z.json", "--samples", "10", "--out", "t.json"]);
        ok(d.path(), &["--threads", threads, "report", "--profile", "b.csv", "--out", "r.svg"]);
    }
    for f in ["z.json", "b.csv", "b.csv.provenance.json", "t.json", "r.svg"] {
        let first = fs::read(runs[0].path().join(f)).unwrap();
        for d in &runs[1..] {
            assert_eq!(fs::read(d.path().join(f)).unwrap(), first, "{f} differs");
        }
    }
    let env_run = Command::new(env!("CARGO_BIN_EXE_wiggly"))
        .args(["beta", "--in", "z.json", "--n-max", "3", "--out", "e.csv"])
        .current_dir(runs[0].path())
        .env("WIGGLY_THREADS", "3")
        .output()
        .unwrap();
    assert!(env_run.status.success());
    assert_eq!(
        fs::read(runs[0].path().join("e.csv")).unwrap(),
        fs::read(runs[0].path().join("b.csv")).unwrap()
    );
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gen", "--fractal", "segment", "--resolution", "65", "--out", "s.json"]);
    fs::write(d.path().join("cfg.json"), r#"{"M": 8, "n-max": 2, "in": "s.json"}"#).unwrap();
    ok(d.path(), &["--config", "cfg.json", "nets", "--n-max", "1", "--out", "n.json"]);
    let doc = read_json(&d.path().join("n.json"));
    let cfg = &doc["provenance"]["config"];
    assert_eq!(cfg["M"], 8.0);
    assert_eq!(cfg["n-max"], 1);
    assert_eq!(cfg["n-min"], 0, "default fills the gap");
    assert_eq!(doc["result"]["hierarchy"]["n_max"], 1);
}

#[test]
fn exit_codes_and_error_documents() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gen", "--fractal", "segment", "--out", "s.json"]);

    let out = wiggly(d.path(), &["nets", "--in", "s.json", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(wiggly(d.path(), &["frobnicate"]).status.code(), Some(2));

    fs::write(d.path().join("bad.json"), r#"{"metric": "euclidean", "points": [[0.0], "x"]}"#).unwrap();
    let out = wiggly(d.path(), &["nets", "--in", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_of(&out);
    assert_eq!(e["error"]["kind"], "schema");
    assert_eq!(e["error"]["field"], "points[1]");

    fs::write(d.path().join("m.json"), r#"{"metric": "matrix", "points": [[0.0]]}"#).unwrap();
    let e = error_of(&wiggly(d.path(), &["nets", "--in", "m.json"]));
    assert_eq!(e["error"]["field"], "metric");

    let out = wiggly(d.path(), &["nets"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"]["field"], "in");

    fs::write(d.path().join("cfg.json"), r#"{"n-maks": 3}"#).unwrap();
    let out = wiggly(d.path(), &["--config", "cfg.json", "nets", "--in", "s.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"]["field"], "n-maks");

    let out = wiggly(d.path(), &["nets", "--in", "s.json", "--M", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"]["field"], "M");

    let out = wiggly(d.path(), &["martingale", "--in", "s.json", "--mode", "paper_constants"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"]["kind"], "param");
}

#[test]
fn report_handles_empty_and_malformed_inputs() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("empty.csv"), "level,point_index,radius,kind,value,bound,witness_json\n").unwrap();
    ok(d.path(), &["report", "--profile", "empty.csv", "--out", "r.svg"]);
    let svg = fs::read_to_string(d.path().join("r.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("no data"));

    fs::write(d.path().join("bad.csv"), "level,point_index,radius,kind,bound\n0,0,1,hat,exact\n").unwrap();
    let out = wiggly(d.path(), &["report", "--profile", "bad.csv", "--out", "x.svg"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_of(&out);
    assert_eq!(e["error"]["field"], "value");
    assert!(e["error"]["message"].as_str().unwrap().contains("missing column"));
}

#[test]
fn antenna_floor_carries_over_to_beta_prime() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gen", "--fractal", "antenna", "--alpha", "0.25", "--depth", "4", "--out", "a.json"]);
    ok(d.path(), &["antenna", "--in", "a.json", "--samples", "12", "--out", "an.json"]);
    ok(
        d.path(),
        &["beta", "--in", "a.json", "--balls", "an.json", "--kinds", "prime", "--candidates", "net_points", "--max-len", "64", "--out", "bp.csv"],
    );
    let balls = read_json(&d.path().join("an.json"));
    let balls = balls["result"]["balls"].as_array().unwrap();
    let values = csv_values(&d.path().join("bp.csv"));
    assert_eq!(balls.len(), values.len());
    for (b, v) in balls.iter().zip(values) {
        let c = b["witness"]["c"].as_f64().unwrap();
        assert!(v >= c / 7.0 - 1e-9, "β′ = {v} below c/7 with c = {c}");
    }
}

#[test]
fn every_command_runs_on_a_small_antenna() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gen", "--fractal", "antenna", "--depth", "5", "--out", "a.json"]);
    ok(d.path(), &["tree", "--in", "a.json", "--samples", "5", "--out", "t.json"]);
    let t = read_json(&d.path().join("t.json"));
    assert!(t["result"]["tour_minus_twice_tree"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(t["result"]["excess"]["holds"], true);
    ok(d.path(), &["martingale", "--in", "a.json", "--out", "m.json"]);
    let m = read_json(&d.path().join("m.json"));
    assert_eq!(m["result"]["weights"]["packing_holds"], true);
    ok(d.path(), &["dim", "--in", "a.json", "--method", "frostmann", "--n-max", "4", "--r-min", "0.004", "--samples", "50", "--out", "f.json"]);
    let f = read_json(&d.path().join("f.json"));
    assert_eq!(f["result"]["method"], "frostmann");
    ok(d.path(), &["tst", "--in", "a.json", "--n-max", "3", "--out", "s.csv"]);
    ok(d.path(), &["dim", "--in", "a.json", "--out", "d.json"]);
    ok(d.path(), &["report", "--sums", "s.csv", "--dim", "d.json", "--title", "a & b", "--out", "r.svg"]);
    let svg = fs::read_to_string(d.path().join("r.svg")).unwrap();
    assert!(svg.contains("slope = ") && svg.contains("a &amp; b"));
}
