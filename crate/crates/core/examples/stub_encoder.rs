//! Run the deterministic stub encoder and mean-pool its output into the
//! 512-d vector the safety head consumes.
//!
//! cargo run --example stub_encoder -- [seed]

use voiceguard::audio::{encode_wav_pcm16, prepare};
use voiceguard::encoder::{load_backend, BackendDescriptor};
use voiceguard::frontend::log_mel_spectrogram;
use voiceguard::head::mean_pool;

fn main() -> voiceguard::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let backend = load_backend(&BackendDescriptor::stub(seed))?;
    for (name, freq) in [("low hum", 120.0f32), ("speech band", 900.0), ("whistle", 3500.0)] {
        let s: Vec<f32> = (0..32_000).map(|i| 0.3 * (2.0 * std::f32::consts::PI * freq * i as f32 / 16_000.0).sin()).collect();
        let mel = log_mel_spectrogram(&prepare(&encode_wav_pcm16(&s, 1, 16_000))?)?;
        let seq = backend.encode(&mel)?;
        let pooled = mean_pool(&seq)?;
        let norm = pooled.iter().map(|v| v * v).sum::<f32>().sqrt();
        println!(
            "{name:<12} {} frames x {} dims -> pooled norm {norm:.3}, first dims {:?}",
            seq.frames,
            seq.dim,
            pooled[..4].iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>()
        );
    }
    Ok(())
}
