//! Decode a WAV file, downmix, resample to 16 kHz and pad to the 30 s window.
//! Without an argument a 44.1 kHz stereo test clip is synthesised.
//!
//! cargo run --example decode_resample -- [clip.wav]

use voiceguard::audio::{decode_wav, encode_wav_f32, pad_or_trim, resample, TARGET_RATE};

fn main() -> voiceguard::Result<()> {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => {
            let interleaved: Vec<f32> = (0..44_100 * 2)
                .flat_map(|i| {
                    let t = i as f32 / 44_100.0;
                    [0.4 * (2.0 * std::f32::consts::PI * 440.0 * t).sin(), 0.2 * (2.0 * std::f32::consts::PI * 880.0 * t).sin()]
                })
                .collect();
            encode_wav_f32(&interleaved, 2, 44_100)
        }
    };
    let decoded = decode_wav(&bytes)?;
    println!("decoded: {} samples at {} Hz ({:.2} s, mono)", decoded.len(), decoded.sample_rate, decoded.duration_secs());
    let resampled = resample(&decoded, TARGET_RATE)?;
    println!("resampled: {} samples at {} Hz", resampled.len(), resampled.sample_rate);
    let window = pad_or_trim(&resampled)?;
    let peak = window.samples.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    let rms = (window.samples.iter().map(|v| v * v).sum::<f32>() / window.len() as f32).sqrt();
    println!("window: {} samples, peak {peak:.3}, rms {rms:.4}", window.len());
    Ok(())
}
