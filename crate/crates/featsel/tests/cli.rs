mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use featsel::featsel_core::eval::Shots;
use featsel::featsel_core::Task;
use featsel::report::read_records;
use featsel::runner::{DatasetSpec, ExperimentConfig, Method, Runner, TransportConfig};
use featsel::transcript::{read_transcript, RecordingClient};

use common::{credit_g, gene_csv, ScriptedClient};

fn featsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_featsel")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_config(methods: &[Method]) -> ExperimentConfig {
    let (csv, desc) = credit_g();
    ExperimentConfig {
        datasets: vec![DatasetSpec {
            name: Some("credit-g".into()),
            csv,
            descriptor: Some(desc),
            target: "high_credit_risk".into(),
            task: Task::Classification,
        }],
        methods: methods.to_vec(),
        shots: vec![Shots::Count(16), Shots::Count(64)],
        seeds: vec![0, 1],
        ratio: 0.3,
        grid: vec![0.1, 1.0, 10.0],
        folds: 3,
        test_fraction: 0.2,
        rfe_lambda: 1.0,
        parallelism: 2,
        transport: methods.iter().any(|m| m.needs_llm()).then(TransportConfig::default),
        rafs: None,
    }
}

#[test]
fn select_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, desc) = credit_g();
    let out = featsel(&[
        "select", "--csv", p(&csv), "--descriptor", p(&desc), "--target", "high_credit_risk", "--method", "mrmr",
        "--shots", "64", "--seed", "3", "--out-dir", p(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let names: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(names.len(), 6);

    let sel = dir.path().join("selections/credit-g__mrmr__64__3.json");
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&sel).unwrap()).unwrap();
    assert_eq!(v["selection"]["selected"], serde_json::json!(names));

    let out = featsel(&[
        "evaluate", "--csv", p(&csv), "--target", "high_credit_risk", "--selection", p(&sel), "--seed", "3",
        "--grid", "0.1,10",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("dataset,method,shots,seed,metric,value"));
    let rec: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&rec[..5], ["credit-g", "mrmr", "full", "3", "auroc"]);
    let auroc: f64 = rec[5].parse().unwrap();
    assert!((0.5..=1.0).contains(&auroc), "{auroc}");
}

#[test]
fn sweep_writes_reports_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("experiment.json");
    fs::write(&cfg_path, serde_json::to_vec_pretty(&small_config(&[Method::Mi, Method::Random])).unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let args = ["sweep", "--config", p(&cfg_path), "--out-dir", p(&out_dir)];

    let first = featsel(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stderr(&first).starts_with("8 cells run, 0 skipped"));
    assert_eq!(read_records(&out_dir.join("records.csv")).unwrap().len(), 8);
    let summary = fs::read_to_string(out_dir.join("summary.md")).unwrap();
    assert!(summary.contains("| method | 16 | 64 | mean ± std |"));
    assert_eq!(fs::read_dir(out_dir.join("selections")).unwrap().count(), 8);

    let second = featsel(&args);
    assert!(second.status.success());
    assert!(stderr(&second).starts_with("0 cells run, 8 skipped"));
}

#[test]
fn invalid_config_aborts_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(&[Method::Mi]);
    cfg.ratio = 1.5;
    let cfg_path = dir.path().join("bad.json");
    fs::write(&cfg_path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let out = featsel(&["sweep", "--config", p(&cfg_path), "--out-dir", p(&out_dir)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("ratio"), "{}", stderr(&out));
    assert!(!out_dir.join("records.csv").exists());
}

#[test]
fn replay_sweep_matches_the_recorded_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&[Method::LlmText, Method::LlmData, Method::Mi]);
    let transcript = dir.path().join("scripted.jsonl");
    let recorder = RecordingClient::new(ScriptedClient::default(), &transcript).unwrap();
    Runner::with_client(cfg.clone(), dir.path().join("recorded"), Arc::new(recorder)).unwrap().run().unwrap();
    // text prompts do not depend on the cell, data-driven ones do
    assert_eq!(read_transcript(&transcript).unwrap().len(), 20 + 20 * 4);

    let cfg_path = dir.path().join("experiment.json");
    fs::write(&cfg_path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    let out_dir = dir.path().join("replayed");
    let out = featsel(&["replay", "--file", p(&transcript), "sweep", "--config", p(&cfg_path), "--out-dir", p(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read(dir.path().join("recorded/records.csv")).unwrap(),
        fs::read(out_dir.join("records.csv")).unwrap()
    );
}

#[test]
fn replay_without_a_recording_fails_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("empty.jsonl");
    fs::write(&transcript, "").unwrap();
    let (csv, desc) = credit_g();
    let out = featsel(&[
        "replay", "--file", p(&transcript), "--model", "gpt-4", "select", "--csv", p(&csv), "--descriptor", p(&desc),
        "--target", "high_credit_risk", "--method", "llm-text", "--out-dir", p(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no recorded completion"), "{}", stderr(&out));
}

#[test]
fn fetch_meta_with_a_local_map() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("genes.csv");
    fs::write(&csv, gene_csv(8)).unwrap();
    let map = dir.path().join("genes.json");
    fs::write(&map, r#"{"tp53": {"official_name": "tumor protein p53", "summary": "A tumor suppressor."}}"#).unwrap();
    let cache = dir.path().join("cache");
    let out = featsel(&[
        "fetch-meta", "--csv", p(&csv), "--target", "status", "--provider", "local", "--metadata-file", p(&map),
        "--cache-dir", p(&cache),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lines: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[0], "TP53\tfound\ttumor protein p53");
    assert_eq!(lines[1], "BRCA1\tmissing");
    assert!(cache.join("TP53.json").exists());
}
