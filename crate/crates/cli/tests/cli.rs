use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn orthopoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthopoly"))
        .args(args)
        .env_remove("ORTHOPOLY_MAX_N")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn identities_up_to_four() {
    let out = orthopoly(&["verify-identities", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 4 * 3 + 4);
    assert!(records.iter().all(|r| r["equal"] == Value::Bool(true)));
    assert_eq!(report["verdict"], "pass");
    let first = &records[0];
    assert_eq!((first["identity"].as_str(), first["n"].as_u64()), (Some("l2"), Some(2)));
    assert!(first.get("elapsed_ms").is_none());
}

#[test]
fn identities_with_only_polarization() {
    let out = orthopoly(&["verify-identities", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let records = json(&out)["records"].as_array().unwrap().clone();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["identity"], "polarization");
}

#[test]
fn identities_beyond_the_cap() {
    let out = orthopoly(&["verify-identities", "--n", "99"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "capacity");
}

#[test]
fn cap_follows_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_orthopoly"))
        .args(["verify-identities", "--n", "4"])
        .env("ORTHOPOLY_MAX_N", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report = json(&out);
    assert_eq!(report["error"]["kind"], "capacity");
    assert!(report["error"]["message"].as_str().unwrap().contains('3'));
}

#[test]
fn term_dump_renders_words() {
    let out = orthopoly(&["verify-identities", "--n", "2", "--dump"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"x1 z x2\"") || text.contains("\"x1 x2 z\""), "{text}");
}

#[test]
fn timing_is_opt_in() {
    let out = orthopoly(&["verify-identities", "--n", "2", "--timing"]);
    let report = json(&out);
    assert!(report["elapsed_ms"].is_u64());
    assert!(report["records"][0]["elapsed_ms"].is_u64());
}

#[test]
fn random_canonical_representation() {
    let out = orthopoly(&["verify-representation", "--n", "3", "--d", "5", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["stages"].as_array().unwrap().len(), 5);
    assert!(report["max_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn trace_square_reports_a_witness() {
    let out = orthopoly(&["verify-representation", "--instance", "trace-square", "--d", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["verdict"], "fail");
    let witness = &report["stages"][0]["witness"];
    let unit = |i: usize| -> Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..3)
            .map(|r| {
                (0..3)
                    .map(|c| [if r == i && c == i { 1.0 } else { 0.0 }, 0.0])
                    .collect()
            })
            .collect();
        serde_json::to_value(rows).unwrap()
    };
    assert_eq!(witness[0], unit(0));
    assert_eq!(witness[1], unit(1));
}

#[test]
fn representation_from_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "p.json",
        r#"{"degree": 2, "kind": "canonical", "phi": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]}"#,
    );
    let out = orthopoly(&["verify-representation", "--input", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["instance"]["source"], "input");
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = orthopoly(&["verify-representation", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "io");

    let bad = write(dir.path(), "bad.json", "{\"degree\": 2,");
    let out = orthopoly(&["verify-representation", "--input", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "parse");

    let out = orthopoly(&["verify-representation", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = orthopoly(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn embed_examples() {
    let dir = tempfile::tempdir().unwrap();
    let diagonal = write(
        dir.path(),
        "a.json",
        r#"{"dim": 2, "terms": [{"x": [1, 0], "f": [1, 0]}]}"#,
    );
    let out = orthopoly(&["embed", "--input", &diagonal]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["k"], 1);

    let off = write(
        dir.path(),
        "b.json",
        r#"{"dim": 2, "terms": [{"x": [1, 0], "f": [0, 1]}]}"#,
    );
    let out = orthopoly(&["embed", "--input", &off]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["k"], 2);
    assert_eq!(report["verdict"], "pass");

    let zero = write(
        dir.path(),
        "c.json",
        r#"{"dim": 2, "terms": [{"x": [0, 0], "f": [1, 0]}]}"#,
    );
    let out = orthopoly(&["embed", "--input", &zero]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "degenerate-input");
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = orthopoly(&["verify-identities", "--n", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), out.stdout);
}

#[test]
fn pretty_summary_replaces_json() {
    let out = orthopoly(&["verify-representation", "--pretty", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(serde_json::from_str::<Value>(&text).is_err());
    assert!(text.contains("verdict"), "{text}");
}

#[test]
fn identical_runs_are_byte_identical() {
    for args in [
        vec!["verify-identities", "--n", "3", "--dump"],
        vec!["verify-representation", "--n", "2", "--d", "4", "--seed", "11"],
        vec![
            "verify-representation",
            "--ai",
            "nested-random",
            "--instance",
            "power",
            "--seed",
            "5",
        ],
    ] {
        assert_eq!(orthopoly(&args).stdout, orthopoly(&args).stdout);
    }
}

#[test]
fn seeds_change_the_instance() {
    let a = orthopoly(&["verify-representation", "--seed", "1"]).stdout;
    let b = orthopoly(&["verify-representation", "--seed", "2"]).stdout;
    assert_ne!(a, b);
}
