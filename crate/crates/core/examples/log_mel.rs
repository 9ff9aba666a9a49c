//! 80-band log-Mel spectrogram of a clip: shape, value range and the loudest
//! bands. Optionally writes the matrix in VSMEL1 format.
//!
//! cargo run --example log_mel -- [clip.wav] [out.vsmel]

use voiceguard::audio::{encode_wav_pcm16, prepare};
use voiceguard::frontend::Frontend;

fn main() -> voiceguard::Result<()> {
    let mut args = std::env::args().skip(1);
    let bytes = match args.next() {
        Some(path) => std::fs::read(path)?,
        None => {
            // A chirp from 200 Hz to 4 kHz over three seconds.
            let s: Vec<f32> = (0..48_000)
                .map(|i| {
                    let t = i as f64 / 16_000.0;
                    (0.3 * (2.0 * std::f64::consts::PI * (200.0 * t + 633.3 * t * t)).sin()) as f32
                })
                .collect();
            encode_wav_pcm16(&s, 1, 16_000)
        }
    };
    let fe = Frontend::new();
    let spec = fe.log_mel(&prepare(&bytes)?)?;
    let (lo, hi) = spec.values.iter().fold((f32::MAX, f32::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    println!("{} mel bands x {} frames, values in [{lo:.3}, {hi:.3}]", spec.n_mels, spec.n_frames);

    let means = spec.row_means();
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
    println!("loudest bands:");
    for &m in order.iter().take(5) {
        println!("  band {m:>2} centred at {:>7.1} Hz, mean {:.3}", fe.filterbank().center_hz(m), means[m]);
    }
    if let Some(out) = args.next() {
        spec.write_to(std::io::BufWriter::new(std::fs::File::create(&out)?))?;
        println!("wrote {out}");
    }
    Ok(())
}
