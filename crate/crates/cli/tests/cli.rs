//! Black-box tests of the `casegraph` binary: exit codes, summary shape,
//! config diagnostics, and the completion query on a planted graph.

use std::path::Path;
use std::process::Command;

fn run(dir: &Path, args: &[&str]) -> (bool, serde_json::Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_casegraph"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn casegraph");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let summary: serde_json::Value =
        serde_json::from_str(stdout.trim()).unwrap_or_else(|_| panic!("summary is not JSON: {stdout}"));
    (out.status.success(), summary)
}

#[test]
fn invalid_config_names_the_field_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"seed": 1, "train_ner": {}}"#).unwrap();
    let (ok, summary) = run(dir.path(), &["train-ner", "--config", "c.json"]);
    assert!(!ok);
    assert_eq!(summary["status"], "error");
    assert!(
        summary["error"].as_str().unwrap().contains("train_ner.corpus"),
        "{summary}"
    );

    // Missing seed for a training task.
    std::fs::write(dir.path().join("c2.json"), r#"{"train_kge": {}}"#).unwrap();
    let (ok, summary) = run(dir.path(), &["train-kge", "--config", "c2.json"]);
    assert!(!ok);
    assert!(summary["error"].as_str().unwrap().contains("seed"), "{summary}");
}

#[test]
fn exit_status_zero_iff_summary_reports_success() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"eval": {"target": "bogus"}}"#).unwrap();
    let (ok, summary) = run(dir.path(), &["eval", "--config", "c.json"]);
    assert!(!ok);
    assert_eq!(summary["status"], "error");
}

#[test]
fn eval_on_perfect_prediction_fixture_scores_one() {
    // Comparing a graphs file to itself is the perfect-prediction fixture.
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = serde_json::json!({
        "seed": 3,
        "gen_corpus": {"n_docs": 6, "out_dir": "corpus", "holdout_fraction": 0.34},
        "eval": {
            "target": "graphs",
            "gold": "corpus/graphs_gold.jsonl",
            "predicted": "corpus/graphs_gold.jsonl"
        }
    });
    std::fs::write(root.join("c.json"), cfg.to_string()).unwrap();
    let (ok, _) = run(root, &["gen-corpus", "--config", "c.json"]);
    assert!(ok);
    let (ok, summary) = run(root, &["eval", "--config", "c.json"]);
    assert!(ok, "{summary}");
    assert_eq!(summary["metrics"]["f1"], 1.0);
    assert_eq!(summary["metrics"]["node_f1"], 1.0);
    assert_eq!(summary["metrics"]["edge_f1"], 1.0);

    // Segment evaluation against the rules that generated the layout.
    let (ok, summary) = run(
        root,
        &[
            "eval",
            "--config",
            "c.json",
            "--set",
            "eval.target=segments",
            "--set",
            "eval.documents=corpus/documents.jsonl",
            "--set",
            "eval.rules=corpus/rules.json",
            "--set",
            "eval.gold=corpus/segments_gold.jsonl",
        ],
    );
    assert!(ok, "{summary}");
    for (_, prf) in summary["metrics"]["exact"].as_object().unwrap() {
        assert_eq!(prf["f1"], 1.0, "{summary}");
    }
}

#[test]
fn complete_on_planted_kg_returns_gold_top1() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::create_dir_all(root.join("kg")).unwrap();
    // A planted deterministic structure: exactly one tail satisfies
    // (h, succ, ·) for every h.
    let n = 24;
    let mut train = String::new();
    for i in 0..n {
        train.push_str(&format!("e{i}\tsucc\te{}\n", (i + 1) % n));
        train.push_str(&format!("e{i}\tpartner\te{}\n", (i + n / 2) % n));
    }
    std::fs::write(root.join("kg/train.txt"), train).unwrap();
    std::fs::write(root.join("kg/valid.txt"), "").unwrap();
    std::fs::write(root.join("kg/test.txt"), "").unwrap();
    let cfg = serde_json::json!({
        "seed": 9,
        "train_kge": {
            "triples_dir": "kg", "checkpoint": "kge.json", "dim": 16, "margin": 4.0,
            "negatives": 6, "learning_rate": 0.05, "epochs": 200, "batch_size": 64,
            "eval_every": 0
        },
        "derive_components": {
            "checkpoint": "kge.json", "triples_dir": "kg", "out_checkpoint": "kge_msre.json",
            "pca_dim": 2
        },
        "complete": {
            "checkpoint": "kge_msre.json", "triples_dir": "kg", "direction": "tail",
            "head": "e5", "relation": "succ", "top_k": 5
        }
    });
    std::fs::write(root.join("c.json"), cfg.to_string()).unwrap();
    let (ok, s) = run(root, &["train-kge", "--config", "c.json"]);
    assert!(ok, "{s}");
    let (ok, s) = run(root, &["derive-components", "--config", "c.json"]);
    assert!(ok, "{s}");
    let (ok, summary) = run(root, &["complete", "--config", "c.json"]);
    assert!(ok, "{summary}");
    assert_eq!(summary["metrics"]["top1"], "e6", "{summary}");

    // Head-side query: (?, succ, e6) should rank e5 first.
    let (ok, summary) = run(
        root,
        &[
            "complete",
            "--config",
            "c.json",
            "--set",
            "complete.direction=head",
            "--set",
            "complete.tail=e6",
        ],
    );
    assert!(ok, "{summary}");
    assert_eq!(summary["metrics"]["top1"], "e5", "{summary}");

    // Unknown entity is a clean error.
    let (ok, summary) = run(
        root,
        &["complete", "--config", "c.json", "--set", "complete.head=nonexistent"],
    );
    assert!(!ok);
    assert!(summary["error"].as_str().unwrap().contains("nonexistent"), "{summary}");
}
