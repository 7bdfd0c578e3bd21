//! End-to-end tests of the binary: exit statuses, output formats, and the
//! JSON round-trip guarantee.

use std::process::{Command, Output};

use finkit::{CanonizeOutcome, CountReport, KVector, MixReport, MixVerdict, SearchOutcome};

fn finkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finkit"))
        .args(args)
        .env_remove("FINKIT_THREADS")
        .output()
        .expect("the binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

#[test]
fn span_emits_one_row_per_element() {
    let output = finkit(&["span", "--k", "2", "--blocks", "2:{0:2} 2:{2:2}", "--format", "csv"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,element,term");
    assert_eq!(lines.len(), 1 + 5, "two level-2 blocks span five elements");
    // Vector text contains commas, so CSV cells are quoted.
    assert!(lines.iter().any(|line| line.contains("\"2:{0:1,2:2}\"")), "{text}");

    let json = finkit(&["span", "--k", "2", "--blocks", "2:{0:2} 2:{2:2}", "--format", "json"]);
    assert_eq!(json.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout_of(&json)).unwrap();
    assert_eq!(rows.len(), 5);
    for row in &rows {
        let element: KVector =
            serde_json::from_value(row.get("element").unwrap().clone()).unwrap();
        assert_eq!(element.level(), 2);
    }
}

#[test]
fn sos_reports_the_violated_clause() {
    let output = finkit(&["sos", "--vector", "2:{0:2}"]);
    assert_eq!(output.status.code(), Some(0), "a negative verdict is still an answer");
    let text = stdout_of(&output);
    assert!(text.contains("false"), "{text}");
    assert!(text.contains("value 1 is never attained"), "{text}");

    let output = finkit(&["sos", "--vector", "1:{0:1,2:1}"]);
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout_of(&output).contains("true"));
}

#[test]
fn count_pins_the_level_one_row() {
    let output = finkit(&["count", "--k", "1", "--d", "2", "--format", "csv"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert_eq!(text.lines().nth(1), Some("1,2,5,1,1,1"));

    let json = finkit(&["count", "--k", "1", "--d", "3", "--format", "json"]);
    let report: CountReport = serde_json::from_str(&stdout_of(&json)).unwrap();
    assert_eq!(report.t, 5);
    assert_eq!(report.c.to_string(), "16", "3·1·5 + 1 arity-3 classes at level 1");
}

#[test]
fn stairs_lists_raw_and_deduplicated_classes() {
    let output = finkit(&["stairs", "--k", "1", "--format", "json"]);
    assert_eq!(output.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(doc["raw_count"], 12);
    assert_eq!(doc["deduped_count"], 5);
    assert_eq!(doc["functions"].as_array().unwrap().len(), 5);

    let raw = finkit(&["stairs", "--k", "1", "--raw", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&raw)).unwrap();
    assert_eq!(doc["functions"].as_array().unwrap().len(), 12);
}

#[test]
fn homog_finds_then_exhausts() {
    let output = finkit(&["homog", "--rule", "min-parity", "--target-len", "3"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("1:{0:1} 1:{2:1} 1:{4:1}"), "{text}");

    let json =
        finkit(&["homog", "--rule", "min-parity", "--target-len", "3", "--format", "json"]);
    let outcome: SearchOutcome = serde_json::from_str(&stdout_of(&json)).unwrap();
    assert!(matches!(outcome, SearchOutcome::Found { .. }));

    let exhausted = finkit(&["homog", "--rule", "min-parity", "--target-len", "5"]);
    assert_eq!(exhausted.status.code(), Some(1), "exhaustion exits 1");
    assert!(stdout_of(&exhausted).contains("exhausted"));
}

#[test]
fn mixing_verdicts_round_trip_as_json() {
    let output =
        finkit(&["mixing", "--rule", "union", "--pair", "x0 | x0+x2", "--format", "json"]);
    assert_eq!(output.status.code(), Some(0));
    let report: MixReport = serde_json::from_str(&stdout_of(&output)).unwrap();
    assert_eq!(report.verdict, MixVerdict::MixedAtHorizon);
    assert_eq!(report.weak_witness, Some("1:{2:1}".parse().unwrap()));

    let separated =
        finkit(&["mixing", "--rule", "union", "--pair", "x0+x2 | x0+x1+x2", "--format", "json"]);
    assert_eq!(separated.status.code(), Some(0), "a separation verdict is an answer");
    let report: MixReport = serde_json::from_str(&stdout_of(&separated)).unwrap();
    let MixVerdict::Separated { witness } = report.verdict else {
        panic!("expected separation, got {:?}", report.verdict);
    };
    assert_eq!(witness.len(), 4);
}

#[test]
fn canonize_defaults_to_a_staircase_universe() {
    let output = finkit(&["canonize", "--rule", "constant", "--format", "json"]);
    assert_eq!(output.status.code(), Some(0));
    let outcome: CanonizeOutcome = serde_json::from_str(&stdout_of(&output)).unwrap();
    let CanonizeOutcome::Found { map, .. } = outcome else {
        panic!("the constant coloring canonizes");
    };
    assert!(map.is_constant());

    // A non-staircase universe violates the precondition and exits 1.
    let units = finkit(&["canonize", "--rule", "constant", "--blocks", "1:{0:1} 1:{1:1}"]);
    assert_eq!(units.status.code(), Some(1));
    assert!(stderr_of(&units).contains("staircase"));
}

#[test]
fn table_colorings_load_from_a_file() {
    let dir = std::env::temp_dir();
    let same = dir.join("finkit-cli-test-same.json");
    let split = dir.join("finkit-cli-test-split.json");
    std::fs::write(&same, r#"{"1:{0:1}": "a", "1:{1:1}": "a", "1:{0:1,1:1}": "a"}"#).unwrap();
    std::fs::write(&split, r#"{"1:{0:1}": "a", "1:{1:1}": "a", "1:{0:1,1:1}": "b"}"#).unwrap();
    let base = ["homog", "--blocks", "1:{0:1} 1:{1:1}", "--target-len", "2", "--table"];

    let mut args: Vec<&str> = base.to_vec();
    let same_path = same.to_str().unwrap();
    args.push(same_path);
    let output = finkit(&args);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let mut args: Vec<&str> = base.to_vec();
    let split_path = split.to_str().unwrap();
    args.push(split_path);
    let output = finkit(&args);
    assert_eq!(output.status.code(), Some(1), "two colors on two blocks cannot homogenize");

    std::fs::remove_file(&same).ok();
    std::fs::remove_file(&split).ok();
}

#[test]
fn usage_errors_exit_2() {
    let missing = finkit(&["span", "--k"]);
    assert_eq!(missing.status.code(), Some(2));

    let bad_rule = finkit(&["mixing", "--rule", "zebra", "--pair", "x0 | x1"]);
    assert_eq!(bad_rule.status.code(), Some(2));
    assert!(stderr_of(&bad_rule).contains("--rule"));

    let bad_pair = finkit(&["mixing", "--rule", "union", "--pair", "x0 & x1"]);
    assert_eq!(bad_pair.status.code(), Some(2));
    assert!(stderr_of(&bad_pair).contains("--pair"));

    let bad_arity = finkit(&["count", "--k", "1", "--d", "1"]);
    assert_eq!(bad_arity.status.code(), Some(2));
    assert!(stderr_of(&bad_arity).contains("--d"));

    let bad_threads = Command::new(env!("CARGO_BIN_EXE_finkit"))
        .args(["count", "--k", "1", "--d", "2"])
        .env("FINKIT_THREADS", "zebra")
        .output()
        .expect("the binary runs");
    assert_eq!(bad_threads.status.code(), Some(2));
    assert!(stderr_of(&bad_threads).contains("FINKIT_THREADS"));
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let args = ["mixing", "--rule", "union", "--pair", "x0 | x0+x2", "--format", "json"];
    let first = finkit(&args);
    let second = finkit(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}
