use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_retweet-guard");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn extract_three_user_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("features.csv");
    ok(&["extract", "--corpus", p(&fixture("three_users.jsonl")), "--out", p(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 65);
    assert_eq!(header[0], "user_id");
    assert_eq!(header[1], "PF1");
    assert_eq!(header[64], "FF3");
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 65);
        assert!(cells[1..].iter().all(|c| c.parse::<f64>().unwrap().is_finite()));
    }
    let u1: Vec<f64> = lines[1].split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    assert_eq!(u1[1], 5.0);
    assert_eq!(u1[7], 2.0);
    assert!((u1[62] - 3.453877639491069).abs() < 1e-12);
    let u2: Vec<f64> = lines[2].split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    assert_eq!(u2[7], 10.0);
    assert_eq!(u2[9], 200.0);
    assert_eq!(u2[16], 0.5);
}

#[test]
fn ingest_reports_label_counts() {
    let text = ok(&[
        "ingest",
        "--corpus",
        p(&fixture("three_users.jsonl")),
        "--labels",
        p(&fixture("three_labels.tsv")),
    ]);
    assert!(text.contains("users\t3"));
    assert!(text.contains("label_bot\t1"));
    assert!(text.contains("label_binary\t1\t2"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["extract", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["extract"]).status.code(), Some(2));
    assert_eq!(run(&["train", "--corpus", "x", "--labels", "y", "--out", "z", "--model", "perceptron"]).status.code(), Some(2));
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in ["ingest", "extract", "train", "evaluate", "importance", "score", "rerank", "threads", "synth", "serve"] {
        assert!(text.contains(cmd), "--help lacks {cmd}");
    }
}

#[test]
fn io_and_validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["extract", "--corpus", "/nonexistent/corpus.jsonl", "--out", p(&dir.path().join("f.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/corpus.jsonl"));

    let labels = dir.path().join("labels.tsv");
    fs::write(&labels, "u1\tbot\nu9\tgenuine\n").unwrap();
    let out = run(&["ingest", "--corpus", p(&fixture("three_users.jsonl")), "--labels", p(&labels)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("u9"));

    let dup = dir.path().join("dup.jsonl");
    let line = fs::read_to_string(fixture("three_users.jsonl")).unwrap();
    let first = line.lines().next().unwrap();
    fs::write(&dup, format!("{first}\n{first}\n")).unwrap();
    let out = run(&["ingest", "--corpus", p(&dup)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("u1"));
}

#[test]
fn synthetic_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["--seed", "7", "synth", "--genuine", "150", "--customers", "150", "--span-days", "21", "--tweets", "300", "--threads", "100", "--out-dir", p(&data)]);
    let corpus = data.join("corpus.jsonl");
    let labels = data.join("labels.tsv");

    let again = dir.path().join("again");
    ok(&["--seed", "7", "synth", "--genuine", "150", "--customers", "150", "--span-days", "21", "--tweets", "300", "--threads", "100", "--out-dir", p(&again)]);
    for f in ["corpus.jsonl", "labels.tsv", "scores.tsv", "tweets.jsonl", "threads.jsonl"] {
        assert_eq!(fs::read(data.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f} differs");
    }

    let report = dir.path().join("report.csv");
    let json = dir.path().join("report.json");
    let eval_args = [
        "--seed", "3", "evaluate", "--corpus", p(&corpus), "--labels", p(&labels), "--model", "svm", "--binary", "--out", p(&report), "--json", p(&json),
    ];
    ok(&eval_args);
    let table = fs::read_to_string(&report).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 2);
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = header.iter().position(|h| *h == "macro_f1").unwrap();
    let macro_f1: f64 = rows[1].split(',').nth(col).unwrap().parse().unwrap();
    assert!(macro_f1 >= 0.95, "macro F1 {macro_f1}");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["results"][0]["model"], "svm");
    assert_eq!(doc["results"][0]["report"]["folds"], 10);

    let report2 = dir.path().join("report2.csv");
    let mut args2 = eval_args.to_vec();
    let out_pos = args2.iter().position(|a| *a == p(&report)).unwrap();
    args2[out_pos] = p(&report2);
    ok(&args2);
    assert_eq!(fs::read(&report).unwrap(), fs::read(&report2).unwrap());

    let model = dir.path().join("model.json");
    ok(&["train", "--corpus", p(&corpus), "--labels", p(&labels), "--model", "lr", "--out", p(&model)]);
    let scored = ok(&["score", "--model-file", p(&model), "--corpus", p(&corpus), "--users", "genuine_00000,customer_00000,ghost"]);
    let lines: Vec<&str> = scored.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("genuine_00000,genuine,"));
    assert!(lines[2].starts_with("customer_00000,customer,"));
    assert!(lines[3].starts_with("ghost,,,"));

    let flows = ok(&["rerank", "--tweets", p(&data.join("tweets.jsonl")), "--customers", p(&labels)]);
    assert_eq!(flows.lines().count(), 6);

    let empty = dir.path().join("none.txt");
    fs::write(&empty, "").unwrap();
    let diag = ok(&["rerank", "--tweets", p(&data.join("tweets.jsonl")), "--customers", p(&empty)]);
    for (i, line) in diag.lines().skip(1).enumerate() {
        for (j, cell) in line.split(',').skip(1).enumerate() {
            if i != j {
                assert_eq!(cell, "0", "off-diagonal cell ({i},{j})");
            }
        }
    }

    let stats = dir.path().join("threads.csv");
    let grid = ok(&["threads", "--threads", p(&data.join("threads.jsonl")), "--stats", p(&stats)]);
    assert_eq!(grid.lines().count(), 17);
    let total: u64 = grid
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(1).map(|c| c.parse::<u64>().unwrap()).collect::<Vec<_>>())
        .sum();
    assert_eq!(total as usize, fs::read_to_string(&stats).unwrap().lines().count() - 1);
}

#[test]
fn importance_writes_every_feature() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--genuine", "40", "--customers", "40", "--span-days", "14", "--tweets", "1", "--threads", "1", "--out-dir", p(&data)]);
    let out = dir.path().join("importance.csv");
    ok(&[
        "--workers", "2", "importance", "--corpus", p(&data.join("corpus.jsonl")), "--labels", p(&data.join("labels.tsv")), "--folds", "5", "--out", p(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("feature,")).count(), 64);
    assert_eq!(text.lines().filter(|l| l.starts_with("family,")).count(), 5);
    assert!(text.lines().any(|l| l.starts_with("all,")));
}
