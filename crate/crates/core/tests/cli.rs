mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::data;

fn procdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procdep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn jsonl(p: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn validate_exit_codes() {
    let ok = procdep(&["validate", "--corpus", path(&data("micro.jsonl"))]);
    assert_eq!(ok.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, r#"{"id":"broken","topic":"t","steps":["a","b"],"entities":["x"],"gold_matrix":[["C"],["C"]]}"#).unwrap();
    let out = procdep(&["validate", "--corpus", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("broken") && text.contains("step 2") && text.contains('x'), "{text}");

    let missing = procdep(&["validate", "--corpus", "/no/such/corpus.jsonl"]);
    assert_eq!(missing.status.code(), Some(2));

    let grid = procdep(&["validate", "--corpus", path(&data("grid.tsv"))]);
    assert_eq!(grid.status.code(), Some(0));
}

#[test]
fn derive_writes_one_graph_per_process() {
    let dir = tempfile::tempdir().unwrap();
    let out = procdep(&["derive", "--dot", "--corpus", path(&data("micro.jsonl")), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let graph = fs::read_to_string(dir.path().join("photosynthesis.graph.json")).unwrap();
    assert!(graph.contains(r#"{"src":4,"dst":5,"entity":"mixture","change":"C ?→leaf"}"#));
    assert!(dir.path().join("photosynthesis.dot").exists());
    let graphs = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().to_string_lossy().ends_with(".graph.json"))
        .count();
    assert_eq!(graphs, 4);

    // Idempotent.
    let first = fs::read(dir.path().join("erosion.dot")).unwrap();
    procdep(&["derive", "--dot", "--corpus", path(&data("micro.jsonl")), "--out", path(dir.path())]);
    assert_eq!(fs::read(dir.path().join("erosion.dot")).unwrap(), first);

    let none = dir.path().join("none.jsonl");
    fs::write(&none, r#"{"id":"quiet","topic":"t","steps":["a","b"],"entities":["x"],"gold_matrix":[["-"],["-"]]}"#).unwrap();
    procdep(&["derive", "--corpus", path(&none), "--out", path(dir.path())]);
    assert_eq!(fs::read_to_string(dir.path().join("quiet.graph.json")).unwrap(), "[]\n");
}

#[test]
fn decode_lambda_changes_only_water() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = data("tied_water.jsonl");
    let logits = data("tied_water_logits.tsv");
    let run = |lambda: &str, sub: &str| {
        let o = procdep(&[
            "decode", "--corpus", path(&corpus), "--logits", path(&logits),
            "--lambda", lambda, "--out", path(&dir.path().join(sub)),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("fallback cells 0"));
        jsonl(&dir.path().join(sub).join("predictions.jsonl")).remove(0)
    };
    let half = run("0.5", "half");
    let one = run("1", "one");
    let (a, b) = (half["gold_matrix"].as_array().unwrap(), one["gold_matrix"].as_array().unwrap());
    let mut diffs = Vec::new();
    for t in 0..a.len() {
        for j in 0..a[t].as_array().unwrap().len() {
            if a[t][j] != b[t][j] {
                diffs.push((t + 1, j));
            }
        }
    }
    assert_eq!(diffs, vec![(4, 0)]);
    assert_eq!(a[1][0], "M root→leaf");
    assert_eq!(b[1][0], "M root→leaf");
}

#[test]
fn decode_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = procdep(&["decode", "--corpus", path(&empty), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("predictions.jsonl")).unwrap(), "");

    let bad = procdep(&["decode", "--corpus", path(&data("micro.jsonl")), "--c", "1.5", "--out", path(dir.path())]);
    assert_eq!(bad.status.code(), Some(2));

    // The logits file covers only tied-water; other processes fall back.
    let o = procdep(&[
        "decode", "--corpus", path(&data("micro.jsonl")), "--logits", path(&data("tied_water_logits.tsv")),
        "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("fallback cells 0"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: no logits for (erosion, step 1, water)"));
}

#[test]
fn decode_output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let sub = dir.path().join(jobs);
        let o = procdep(&[
            "decode", "--corpus", path(&data("micro.jsonl")), "--priors", path(&data("priors.tsv")),
            "--edge-scores", path(&data("edge_scores.tsv")), "--jobs", jobs, "--out", path(&sub),
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(fs::read(sub.join("predictions.jsonl")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    // Predictions are a valid corpus.
    let check = procdep(&["validate", "--corpus", path(&dir.path().join("1/predictions.jsonl"))]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn eval_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = procdep(&[
        "eval", "--pred", path(&data("eval_pred.jsonl")), "--gold", path(&data("eval_gold.jsonl")),
        "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let tsv = fs::read_to_string(dir.path().join("eval_summary.tsv")).unwrap();
    assert!(tsv.contains("dependency\t0.5333\t0.5333\t0.5333\t8\t15\t15\n"), "{tsv}");
    assert!(tsv.contains("statechange\t0.6667\t0.6667\t0.6667\t4\t6\t6\n"), "{tsv}");
    let dep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("dependency_report.json")).unwrap()).unwrap();
    assert_eq!(dep["counts"]["matched"], 8);

    let same = procdep(&[
        "eval", "--pred", path(&data("micro.jsonl")), "--corpus", path(&data("micro.jsonl")),
        "--out", path(dir.path()),
    ]);
    assert_eq!(same.status.code(), Some(0));
    let tsv = fs::read_to_string(dir.path().join("eval_summary.tsv")).unwrap();
    assert!(tsv.contains("dependency\t1.0000\t1.0000\t1.0000\t"));
    assert!(tsv.contains("statechange\t1.0000\t1.0000\t1.0000\t"));

    let mismatch = procdep(&[
        "eval", "--pred", path(&data("eval_pred.jsonl")), "--gold", path(&data("micro.jsonl")),
        "--out", path(dir.path()),
    ]);
    assert_eq!(mismatch.status.code(), Some(1));
}

#[test]
fn eval_disjoint_predictions_score_zero() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.jsonl");
    fs::write(
        &pred,
        r#"{"id":"e1","topic":"eval","steps":["Step 1.","Step 2.","Step 3.","Step 4."],"entities":["a","b"],"gold_matrix":[["-","C ?→moon"],["-","-"],["-","-"],["-","-"]],"gold_graph":[{"src":1,"dst":4,"entity":"b","change":"C"}]}
{"id":"e2","topic":"eval","steps":["Step 1.","Step 2.","Step 3."],"entities":["x","y"],"gold_matrix":[["-","-"],["-","-"],["-","-"]],"gold_graph":[]}
"#,
    )
    .unwrap();
    let o = procdep(&[
        "eval", "--pred", path(&pred), "--gold", path(&data("eval_gold.jsonl")), "--out", path(dir.path()),
        "--task", "dependency",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let tsv = fs::read_to_string(dir.path().join("eval_summary.tsv")).unwrap();
    assert!(tsv.contains("dependency\t0.0000\t0.0000\t0.0000\t0\t3\t15\n"), "{tsv}");
    assert!(!tsv.contains("statechange"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "corpus = {}\nlogits = {}\nlambda = 1\nout = cfg-out\n",
            path(&data("tied_water.jsonl")),
            path(&data("tied_water_logits.tsv"))
        ),
    )
    .unwrap();
    let o = procdep(&["decode", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    let from_file = jsonl(&dir.path().join("cfg-out/predictions.jsonl")).remove(0);
    assert_eq!(from_file["gold_matrix"][3][0], "-");

    let flagged = dir.path().join("flag-out");
    let o = procdep(&["decode", "--config", path(&cfg), "--lambda", "0.5", "--out", path(&flagged)]);
    assert_eq!(o.status.code(), Some(0));
    let over = jsonl(&flagged.join("predictions.jsonl")).remove(0);
    assert_eq!(over["gold_matrix"][3][0], "M leaf→?");

    fs::write(&cfg, "lambda = 2\n").unwrap();
    assert_eq!(procdep(&["decode", "--config", path(&cfg)]).status.code(), Some(2));
    fs::write(&cfg, "speed = 2\n").unwrap();
    assert_eq!(procdep(&["decode", "--config", path(&cfg)]).status.code(), Some(2));
}

#[test]
fn export_dot_single_process() {
    let dir = tempfile::tempdir().unwrap();
    let o = procdep(&[
        "export-dot", "--corpus", path(&data("photosynthesis.jsonl")), "--id", "photosynthesis",
        "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let dot = fs::read_to_string(dir.path().join("photosynthesis.dot")).unwrap();
    assert!(dot.starts_with("digraph \"photosynthesis\" {"));
    assert!(dot.contains("s4 -> s5 [label=\"CREATE(mixture)\"];"));

    let o = procdep(&["export-dot", "--corpus", path(&data("photosynthesis.jsonl")), "--id", "nope", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(procdep(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(procdep(&["validate"]).status.code(), Some(2));
    assert_eq!(procdep(&["--help"]).status.code(), Some(0));
}
