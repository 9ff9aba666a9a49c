//! End-to-end classification of one clip under the default (0.2) and the
//! high-security (0.15) thresholds, with the audit record that accompanies
//! each decision.
//!
//! cargo run --example classify_clip -- [clip.wav] [head.vshp]

use std::sync::Arc;

use voiceguard::audio::encode_wav_pcm16;
use voiceguard::encoder::StubEncoder;
use voiceguard::gateway::{AuditLog, Engine, EngineConfig};
use voiceguard::head::HeadParams;

fn main() -> voiceguard::Result<()> {
    let mut args = std::env::args().skip(1);
    let bytes = match args.next() {
        Some(p) => std::fs::read(p)?,
        None => {
            let s: Vec<f32> = (0..64_000).map(|i| 0.25 * (i as f32 * 0.11).sin() * (i as f32 * 0.0007).cos()).collect();
            encode_wav_pcm16(&s, 1, 16_000)
        }
    };
    // Without a trained head the standard-shape initialisation stands in.
    let head = match args.next() {
        Some(p) => HeadParams::load(p)?,
        None => HeadParams::standard(1),
    };
    for threshold in [0.2, 0.15] {
        let cfg = EngineConfig { threshold, ..EngineConfig::default() };
        let engine = Engine::new(cfg, Arc::new(StubEncoder::new(0)), head.clone(), AuditLog::memory())?;
        let c = engine.classify_bytes(&bytes, false)?;
        println!(
            "threshold {threshold:.2}: {} (p = {:.4}, review {})",
            c.decision.label, c.decision.p_malicious, c.decision.review
        );
        println!("  audit: {}", serde_json::to_string(&c.audit).expect("record serialises"));
    }
    Ok(())
}
