use std::path::Path;
use std::process::{Command, Output};

fn controversy(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_controversy"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = controversy(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lexical_only(spec: &Path) {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(spec).unwrap()).unwrap();
    v["models"] = serde_json::json!(["tfidf-margin", "lm"]);
    v["bootstrap"]["resamples"] = serde_json::json!(100);
    std::fs::write(spec, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(controversy(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        controversy(dir.path(), &["train", "--model", "svm"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_data_file_fails_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = controversy(
        dir.path(),
        &[
            "train",
            "--model",
            "lm",
            "--data",
            "none.jsonl",
            "--splits",
            "none.json",
            "--out",
            "m.ctrv",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("none.jsonl"));
}

#[test]
fn malformed_report_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("r.json"), "{not json").unwrap();
    assert_eq!(
        controversy(dir.path(), &["report", "--input", "r.json"]).status.code(),
        Some(3)
    );
}

#[test]
fn fixture_crawl_then_split_renders_the_split_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let summary = ok(
        d,
        &[
            "--seed",
            "4",
            "crawl",
            "--fixture-server",
            "--negatives",
            "2",
            "--out",
            "crawl",
        ],
    );
    assert!(summary.contains("documents"));
    for f in ["documents.jsonl", "edges.jsonl", "seeds.jsonl", "skipped.jsonl"] {
        assert!(d.join("crawl").join(f).exists(), "{f}");
    }
    let args = [
        "split",
        "--data",
        "crawl/documents.jsonl",
        "--edges",
        "crawl/edges.jsonl",
        "--train",
        "3",
        "--validation",
        "1",
        "--test",
        "1",
        "--out",
        "splits.json",
    ];
    let table = ok(d, &args);
    let header = table.lines().nth(1).unwrap();
    for col in ["Set", "Seeds", "Total", "Controversial", "General Web"] {
        assert!(header.contains(col), "{header}");
    }
    assert_eq!(ok(d, &["report", "--input", "splits.json"]), table);

    let too_many = [
        "split",
        "--data",
        "crawl/documents.jsonl",
        "--edges",
        "crawl/edges.jsonl",
        "--out",
        "x.json",
    ];
    assert_eq!(controversy(d, &too_many).status.code(), Some(2));
}

#[test]
fn synthetic_experiment_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("p.json"), r#"{"per_topic": 30, "negatives": 90}"#).unwrap();
    ok(
        d,
        &[
            "--seed", "2", "synth", "--kind", "topics", "--params", "p.json", "--out", "topics",
        ],
    );
    lexical_only(&d.join("topics/experiment.json"));
    let table = ok(d, &["experiment", "--spec", "topics/experiment.json", "--out", "a"]);
    ok(d, &["experiment", "--spec", "topics/experiment.json", "--out", "b"]);
    let a = std::fs::read(d.join("a/report.json")).unwrap();
    let b = std::fs::read(d.join("b/report.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(std::fs::read_to_string(d.join("a/report.txt")).unwrap(), table);
    assert_eq!(ok(d, &["report", "--input", "a/report.json"]), table);
    assert_eq!(
        ok(d, &["report", "--input", "a/report.json", "--format", "json"]).as_bytes(),
        &a[..]
    );

    ok(
        d,
        &[
            "--seed",
            "3",
            "experiment",
            "--spec",
            "topics/experiment.json",
            "--out",
            "c",
        ],
    );
    assert_ne!(std::fs::read(d.join("c/report.json")).unwrap(), a);
}

#[test]
fn train_and_eval_round_trip_through_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("p.json"), r#"{"documents": 300}"#).unwrap();
    ok(
        d,
        &["synth", "--kind", "separable", "--params", "p.json", "--out", "sep"],
    );
    for (model, out) in [("tfidf", "t.ctrv"), ("lm", "l.ctrv")] {
        let args = [
            "train",
            "--model",
            model,
            "--data",
            "sep/documents.jsonl",
            "--splits",
            "sep/splits.json",
            "--out",
            out,
        ];
        ok(d, &args);
    }
    let args = [
        "eval",
        "--checkpoint",
        "t.ctrv",
        "--checkpoint",
        "l.ctrv",
        "--data",
        "sep/documents.jsonl",
        "--splits",
        "sep/splits.json",
        "--json",
        "eval.json",
        "--roc",
        "roc.csv",
        "--resamples",
        "100",
    ];
    let table = ok(d, &args);
    assert!(table.contains("TfIdf-SVM") && table.contains("LM"));
    assert_eq!(ok(d, &["report", "--input", "eval.json"]), table);
    let roc = std::fs::read_to_string(d.join("roc.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr\n"));

    std::fs::write(d.join("bad.ctrv"), b"NOPE").unwrap();
    let bad = ["eval", "--checkpoint", "bad.ctrv", "--data", "sep/documents.jsonl"];
    assert_eq!(controversy(d, &bad).status.code(), Some(3));
}

#[test]
fn seeds_are_extracted_from_a_local_page() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let html = r#"<html><body><div id="mw-content-text">
        <h2><span class="mw-headline">Politics</span></h2>
        <ul><li><a href="/wiki/Abortion">Abortion</a></li><li><a href="/wiki/Gun_control">Gun control</a></li></ul>
        </div></body></html>"#;
    std::fs::write(d.join("list.html"), html).unwrap();
    let out = ok(
        d,
        &[
            "seeds",
            "--html",
            "list.html",
            "--base",
            "https://en.wikipedia.org/wiki/List_of_controversial_issues",
        ],
    );
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["url"], "https://en.wikipedia.org/wiki/Abortion");
    assert_eq!(lines[0]["topic"], "Politics");
}
