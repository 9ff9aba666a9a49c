mod common;

use std::process::{Command, Output};

use common::fixtures::{bin, head_file, silence_wav, tone_wav, write};
use voiceguard::dataset::TwoGaussians;
use voiceguard::gateway::{read_audit_log, AuditEntry};

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).env_remove("VSG_THRESHOLD").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["classify", "x.wav", "--backend", "onnx"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let wav = write(dir.path(), "a.wav", &silence_wav(1.0));
    // No head configured.
    assert_eq!(code(&run(&["classify", s(&wav)])), 2);
}

#[test]
fn error_families_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let head = head_file(dir.path(), 1);
    let audit = dir.path().join("audit.jsonl");
    let classify = |wav: &str, head: &str| {
        run(&["classify", wav, "--head", head, "--audit-log", s(&audit)])
    };
    let missing = dir.path().join("missing.wav");
    assert_eq!(code(&classify(s(&missing), s(&head))), 3);
    let garbage = write(dir.path(), "bad.wav", b"RIFF\x04\x00\x00\x00WAVE");
    assert_eq!(code(&classify(s(&garbage), s(&head))), 5);
    let wav = write(dir.path(), "ok.wav", &silence_wav(0.5));
    let mut bytes = std::fs::read(&head).unwrap();
    let n = bytes.len();
    bytes[n - 10] ^= 0xff;
    let corrupt = write(dir.path(), "corrupt.vshp", &bytes);
    assert_eq!(code(&classify(s(&wav), s(&corrupt))), 4);
}

#[test]
fn classify_threshold_override_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let head = head_file(dir.path(), 2);
    let audit = dir.path().join("audit.jsonl");
    let wav = write(dir.path(), "tone.wav", &tone_wav(440.0, 2.0, 0.4));
    let go = |t: &str| {
        let o = run(&["classify", s(&wav), "--head", s(&head), "--audit-log", s(&audit), "--threshold", t]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()
    };
    let high_security = go("0.15");
    let strict = go("0.7");
    assert_eq!(high_security["threshold"], 0.15);
    assert_eq!(strict["threshold"], 0.7);
    assert_eq!(high_security["p_malicious"], strict["p_malicious"]);
    let entries = read_audit_log(&audit).unwrap();
    assert_eq!(entries.len(), 2);
    let AuditEntry::Decision(r) = &entries[0] else { panic!("expected a decision record") };
    assert_eq!(r.threshold, 0.15);
    assert_eq!(Some(r.p_malicious), high_security["p_malicious"].as_f64());
}

#[test]
fn config_file_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let head = head_file(dir.path(), 3);
    let wav = write(dir.path(), "tone.wav", &tone_wav(300.0, 1.0, 0.3));
    let conf = dir.path().join("vg.toml");
    std::fs::write(
        &conf,
        format!("threshold = 0.3\nhead = '{}'\naudit_log = '{}'\n", s(&head), s(&dir.path().join("a.jsonl"))),
    )
    .unwrap();
    let threshold = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(bin());
        c.args(["classify", s(&wav), "--config", s(&conf)]);
        if let Some(f) = flag {
            c.args(["--threshold", f]);
        }
        match env {
            Some(e) => c.env("VSG_THRESHOLD", e),
            None => c.env_remove("VSG_THRESHOLD"),
        };
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["threshold"].as_f64().unwrap()
    };
    assert_eq!(threshold(None, None), 0.3);
    assert_eq!(threshold(Some("0.4"), None), 0.4);
    assert_eq!(threshold(Some("0.4"), Some("0.15")), 0.15);
}

#[test]
fn train_eval_sweep_cv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = TwoGaussians::new(512, 0.1, 1.0, 5);
    let train = dir.path().join("train.vsed");
    let val = dir.path().join("val.vsed");
    g.sample(120, 80, 1).save(&train).unwrap();
    g.sample(40, 30, 2).save(&val).unwrap();

    let heads: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("head{i}.vshp"));
            let o = run(&[
                "train-head", "--train", s(&train), "--val", s(&val), "--out", s(&out), "--seed", "7", "--max-steps", "300",
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(heads[0], heads[1], "same seed must give byte-identical heads");
    let head = dir.path().join("head0.vshp");

    let o = run(&["eval", "--head", s(&head), "--data", s(&val), "--threshold", "0.5", "--json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["f1"].as_f64().unwrap() > 0.9);
    assert!(report["roc_auc"].as_f64().is_some());

    let o = run(&["sweep", "--head", s(&head), "--data", s(&val), "--json"]);
    assert!(o.status.success());
    let taus: Vec<f64> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["tau"].as_f64().unwrap())
        .collect();
    assert_eq!(taus.len(), 19);
    assert!((taus[0] - 0.05).abs() < 1e-12 && (taus[18] - 0.95).abs() < 1e-12);
    let o = run(&["sweep", "--head", s(&head), "--data", s(&val)]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("selected threshold"));

    let o = run(&["cv", "--data", s(&train), "--k", "3", "--max-steps", "300"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("fold ")).count(), 3);
    assert!(text.contains("F1") && text.contains("ROC-AUC"));
}

#[test]
fn bench_reports_both_paths() {
    let dir = tempfile::tempdir().unwrap();
    let head = head_file(dir.path(), 4);
    let wav = write(dir.path(), "tone.wav", &tone_wav(440.0, 3.0, 0.3));
    let audit = dir.path().join("audit.jsonl");
    let o = run(&[
        "bench", s(&wav), "--head", s(&head), "--audit-log", s(&audit), "--repetitions", "10", "--warmup", "1", "--json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for path in ["classification", "full_pipeline"] {
        let stats = r[path].as_object().unwrap();
        assert_eq!(stats.len(), 3);
        assert!(stats.contains_key("p50_ms") && stats.contains_key("p95_ms") && stats.contains_key("mean_ms"));
    }
    assert_eq!(code(&run(&["bench", s(&wav), "--head", s(&head), "--repetitions", "3"])), 2);
}
