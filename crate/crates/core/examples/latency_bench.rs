//! Latency of the classification path and the full pipeline on a 30 s clip,
//! stub backend, single thread.
//!
//! cargo run --release --example latency_bench -- [repetitions]

use std::sync::Arc;

use voiceguard::audio::encode_wav_pcm16;
use voiceguard::encoder::StubEncoder;
use voiceguard::gateway::{bench, bench_table, AuditLog, Engine, EngineConfig};
use voiceguard::head::HeadParams;

fn main() -> voiceguard::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let dir = std::env::temp_dir().join("voiceguard-bench");
    std::fs::create_dir_all(&dir)?;
    let clip = dir.join("clip-30s.wav");
    let s: Vec<f32> = (0..480_000).map(|i| 0.2 * (i as f32 * 0.07).sin() + 0.05 * (i as f32 * 0.9).sin()).collect();
    std::fs::write(&clip, encode_wav_pcm16(&s, 1, 16_000))?;

    let engine = Engine::new(EngineConfig::default(), Arc::new(StubEncoder::new(0)), HeadParams::standard(1), AuditLog::memory())?;
    let report = bench(&engine, &[clip], reps, 3)?;
    println!("{} repetitions after {} warm-up runs, transcription: {}", report.repetitions, report.warmup, report.transcription);
    print!("{}", bench_table(&report));
    Ok(())
}
