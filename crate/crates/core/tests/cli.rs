use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

use xum_eval::dataset::{encode_similarity_matrix, SimilarityMatrix};
use xum_eval::embeddings::{save_embedding_file, EmbeddingSet};
use xum_eval::report::EvalReport;

fn toy(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy").join(name)
}

fn xum(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_xum-eval"))
        .args(args)
        .env_remove("XUM_EVAL_PROVIDER_URL")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn eval_toy(predictions: &Path, extra: &[&str]) -> Output {
    let manifest = toy("manifest.jsonl");
    let mut args = vec!["eval", "--manifest", manifest.to_str().unwrap(), "--predictions", predictions.to_str().unwrap()];
    args.extend_from_slice(extra);
    xum(&args, "")
}

#[test]
fn parse_both_task() {
    let v = json(&xum(&["parse"], "[f03] A man walks. [f07][f03] He sits.\n"));
    assert_eq!(v["indices"], serde_json::json!([3, 7]));
    assert_eq!(v["text"], "A man walks. He sits.");
    assert_eq!(v["token_spans"][1]["offset"], 19);
}

#[test]
fn parse_video_without_tokens_exits_2() {
    let out = xum(&["parse", "--task", "VIDEO"], "just words");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty summary"));
}

#[test]
fn parse_text_without_tokens_is_fine() {
    let v = json(&xum(&["parse", "--task", "TEXT"], "just words"));
    assert_eq!(v["text"], "just words");
    assert_eq!(v["indices"], serde_json::json!([]));
}

#[test]
fn parse_canonical_drops_out_of_range() {
    let v = json(&xum(&["parse", "--canonical", "--target-frames", "10"], "[f12] a [f04] b [f02] c"));
    assert_eq!(v["indices"], serde_json::json!([2, 4]));
}

#[test]
fn missing_input_file_exits_1() {
    let out = xum(&["parse", "/nonexistent/summary.txt"], "");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn scores_from_logits() {
    let v = json(&xum(&["scores", "--logits", toy("v2_logits.jsonl").to_str().unwrap()], ""));
    let scores = v["scores"].as_array().unwrap();
    assert_eq!(scores.len(), 100);
    let nonzero: Vec<f64> = scores.iter().map(|s| s.as_f64().unwrap()).filter(|&s| s > 0.0).collect();
    assert_eq!(nonzero.len(), 2);
    assert!(scores[5].as_f64().unwrap() > 0.0 && scores[50].as_f64().unwrap() > 0.0);
    let mean = nonzero.iter().sum::<f64>() / 2.0;
    assert!((v["mean_score"].as_f64().unwrap() - mean).abs() <= 1e-6);
}

#[test]
fn filter_similarity_matrix_and_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("m.xsim");
    let m = SimilarityMatrix::new(vec![vec![1.0, 0.95, 0.5], vec![0.95, 1.0, 0.5], vec![0.5, 0.5, 1.0]]).unwrap();
    std::fs::write(&sim, encode_similarity_matrix(&m)).unwrap();
    let v = json(&xum(&["filter", "--sim", sim.to_str().unwrap()], ""));
    assert_eq!(v["kept"], serde_json::json!([0, 2]));
    assert_eq!(v["input_count"], 3);

    let emb = dir.path().join("e.xemb");
    let set = EmbeddingSet::from_vectors([vec![1.0, 0.0], vec![1.0, 0.01], vec![0.0, 1.0]]).unwrap();
    save_embedding_file(&set, &emb).unwrap();
    let v = json(&xum(&["filter", "--embeddings", emb.to_str().unwrap(), "--threshold", "0.93"], ""));
    assert_eq!(v["kept"], serde_json::json!([0, 2]));

    let out = xum(&["filter", "--sim", sim.to_str().unwrap(), "--threshold", "1.5"], "");
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&sim, b"XSIM\x03\0\0\0").unwrap();
    assert_eq!(xum(&["filter", "--sim", sim.to_str().unwrap()], "").status.code(), Some(1));
}

#[test]
fn stats_on_toy_manifest() {
    let v = json(&xum(&["stats", "--manifest", toy("manifest.jsonl").to_str().unwrap()], ""));
    assert_eq!(v["n_videos"], 2);
    assert_eq!(v["mean_duration_s"], 150.0);
    assert_eq!(v["mean_video_summary_frames"], 2.0);
    // 2/100 and 2/200
    assert_eq!(v["mean_compression_ratio"], 0.015);
}

#[test]
fn encode_short_video() {
    let v = json(&xum(&["encode", "--frame-count", "40"], ""));
    assert_eq!(v["shorter_than_target"], true);
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 100);
    assert_eq!(entries[99]["token"], "[f99]");
    assert_eq!(entries[99]["visual_slot"], 39);
}

#[test]
fn eval_toy_values_and_determinism() {
    let first = eval_toy(&toy("predictions.jsonl"), &[]);
    let second = eval_toy(&toy("predictions.jsonl"), &[]);
    assert_eq!(first.stdout, second.stdout);
    let v = json(&first);
    let v1 = &v["per_video"]["v1"];
    assert_eq!(v1["v2v"]["f1"], 0.0);
    assert_eq!(v1["clip"]["f_clip"], 0.471405);
    assert_eq!(v1["cross_f_clip"], 0.485702);
    assert_eq!(v1["vt_clip_score"], 0.853553);
    assert_eq!(v1["text"]["rouge_l"], 0.7);
    let v2 = &v["per_video"]["v2"];
    assert_eq!(v2["v2v"]["f1"], 1.0);
    assert_eq!(v2["clip"]["f_clip"], 1.0);
    assert_eq!(v2["text"]["bleu4"], 1.0);
    assert_eq!(v["corpus_means"]["f_clip"]["mean"], 0.735703);
}

#[test]
fn eval_report_round_trips() {
    let out = eval_toy(&toy("predictions.jsonl"), &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    let report = EvalReport::from_json(&text).unwrap();
    assert_eq!(report.to_json().unwrap(), text);
}

#[test]
fn eval_empty_predictions_lists_all_missing() {
    let empty = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/empty_predictions.jsonl");
    let v = json(&eval_toy(&empty, &[]));
    assert_eq!(v["missing"], serde_json::json!(["v1", "v2"]));
    assert!(v["per_video"].as_object().unwrap().is_empty());
}

#[test]
fn eval_metric_subset_and_table() {
    let v = json(&eval_toy(&toy("predictions.jsonl"), &["--metrics", "f1,cider"]));
    assert!(v["per_video"]["v1"]["clip"].is_null());
    assert!(v["corpus_means"]["cider"].is_object());
    let out = eval_toy(&toy("predictions.jsonl"), &["--format", "table", "--percent"]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("47.14"), "{table}");
    assert_eq!(eval_toy(&toy("predictions.jsonl"), &["--metrics", "meteor"]).status.code(), Some(2));
}
