//! WAV decoding, sample-rate conversion and fixed-window length normalisation.

use crate::error::{Error, Result};

/// Sample rate the frontend and encoder expect.
pub const TARGET_RATE: u32 = 16_000;
/// Thirty seconds at [`TARGET_RATE`].
pub const WINDOW_SAMPLES: usize = 480_000;

/// Mono audio, samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::OutOfRange("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteInput("audio samples"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decode a RIFF/WAVE byte stream (PCM16 or IEEE float32, one or two
/// channels) into a mono buffer. Stereo is downmixed by averaging.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    let malformed = |m: &str| Error::MalformedContainer(m.to_string());
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE magic"));
    }
    let riff_len = le_u32(bytes, 4) as usize;
    if riff_len + 8 > bytes.len() || riff_len < 4 {
        return Err(malformed("RIFF size exceeds file length"));
    }
    let end = riff_len + 8;

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= end {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= end)
            .ok_or_else(|| malformed("chunk size exceeds container"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(malformed("fmt chunk too short"));
                }
                let mut format = le_u16(body, 0);
                if format == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(malformed("extensible fmt chunk too short"));
                    }
                    // First two bytes of the sub-format GUID carry the codec tag.
                    format = le_u16(body, 24);
                }
                fmt = Some(FmtChunk {
                    format,
                    channels: le_u16(body, 2),
                    sample_rate: le_u32(body, 4),
                    bits: le_u16(body, 14),
                });
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word aligned.
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| malformed("missing fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("missing data chunk"))?;
    if fmt.sample_rate == 0 {
        return Err(malformed("zero sample rate"));
    }
    if !(1..=2).contains(&fmt.channels) {
        return Err(Error::UnsupportedEncoding(format!("{} channels", fmt.channels)));
    }
    let channels = fmt.channels as usize;

    let interleaved: Vec<f32> = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32 / 32768.0)
            .collect(),
        (FORMAT_IEEE_FLOAT, 32) => {
            let mut out = Vec::with_capacity(data.len() / 4);
            for c in data.chunks_exact(4) {
                let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                if !v.is_finite() {
                    return Err(malformed("non-finite float sample"));
                }
                out.push(v.clamp(-1.0, 1.0));
            }
            out
        }
        (f, b) => {
            return Err(Error::UnsupportedEncoding(format!(
                "format tag {f:#06x} with {b} bits per sample"
            )))
        }
    };

    let samples: Vec<f32> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f32>() / channels as f32)
            .collect()
    };
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(AudioBuffer { samples, sample_rate: fmt.sample_rate })
}

fn wav_header(out: &mut Vec<u8>, format: u16, channels: u16, rate: u32, bits: u16, data_len: usize) {
    let block_align = channels as u32 * bits as u32 / 8;
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * block_align).to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
}

/// Encode interleaved samples as PCM16. Values are scaled by 32768 and
/// saturated, the inverse of the decoder's `x / 32768` rule.
pub fn encode_wav_pcm16(interleaved: &[f32], channels: u16, sample_rate: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(44 + interleaved.len() * 2);
    wav_header(&mut out, FORMAT_PCM, channels, sample_rate, 16, interleaved.len() * 2);
    for &s in interleaved {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_wav_f32(interleaved: &[f32], channels: u16, sample_rate: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(44 + interleaved.len() * 4);
    wav_header(&mut out, FORMAT_IEEE_FLOAT, channels, sample_rate, 32, interleaved.len() * 4);
    for &s in interleaved {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

// Resampler design: polyphase windowed sinc. Each phase spans 16 zero crossings
// of the lower-rate sinc on either side (32 taps measured at the lower rate).
const ZERO_CROSSINGS: usize = 16;
const KAISER_BETA: f64 = 6.0;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

struct PolyphaseKernel {
    up: usize,
    down: usize,
    half_width: usize,
    /// `up` phases of `2 * half_width` taps each, stored contiguously.
    taps: Vec<f64>,
}

impl PolyphaseKernel {
    fn new(up: usize, down: usize) -> Self {
        let scale = (up as f64 / down as f64).min(1.0);
        let half_width = (ZERO_CROSSINGS as f64 / scale).ceil() as usize;
        let width = 2 * half_width;
        let norm = bessel_i0(KAISER_BETA);
        let mut taps = vec![0.0; up * width];
        for p in 0..up {
            let frac = p as f64 / up as f64;
            let phase = &mut taps[p * width..(p + 1) * width];
            for (j, tap) in phase.iter_mut().enumerate() {
                let x = (half_width as f64 - 1.0 - j as f64) + frac;
                let r = x / half_width as f64;
                let window = if r.abs() >= 1.0 {
                    0.0
                } else {
                    bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
                };
                *tap = scale * sinc(scale * x) * window;
            }
            // Unity DC gain per phase.
            let sum: f64 = phase.iter().sum();
            phase.iter_mut().for_each(|t| *t /= sum);
        }
        Self { up, down, half_width, taps }
    }

    fn apply(&self, input: &[f32]) -> Vec<f32> {
        let n_out = (input.len() * self.up).div_ceil(self.down);
        let width = 2 * self.half_width;
        let mut out = Vec::with_capacity(n_out);
        for n in 0..n_out {
            let pos = n * self.down;
            let base = pos / self.up;
            let p = pos % self.up;
            let phase = &self.taps[p * width..(p + 1) * width];
            // First tap aligns with input index base - half_width + 1.
            let first = base as isize - self.half_width as isize + 1;
            let mut acc = 0.0f64;
            for (j, &w) in phase.iter().enumerate() {
                let k = first + j as isize;
                if k >= 0 && (k as usize) < input.len() {
                    acc += w * input[k as usize] as f64;
                }
            }
            out.push(acc as f32);
        }
        out
    }
}

/// Band-limited sample-rate conversion. Returns the input unchanged when the
/// rates already match.
pub fn resample(a: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    if target_rate == 0 {
        return Err(Error::OutOfRange("target rate must be positive".into()));
    }
    if a.sample_rate == target_rate {
        return Ok(a.clone());
    }
    let g = gcd(a.sample_rate as u64, target_rate as u64);
    let up = (target_rate as u64 / g) as usize;
    let down = (a.sample_rate as u64 / g) as usize;
    let kernel = PolyphaseKernel::new(up, down);
    let samples = kernel
        .apply(&a.samples)
        .into_iter()
        .map(|s| s.clamp(-1.0, 1.0))
        .collect();
    Ok(AudioBuffer { samples, sample_rate: target_rate })
}

/// Zero-pad at the end or truncate to exactly thirty seconds of 16 kHz audio.
pub fn pad_or_trim(a: &AudioBuffer) -> Result<AudioBuffer> {
    if a.sample_rate != TARGET_RATE {
        return Err(Error::WrongRate { expected: TARGET_RATE, actual: a.sample_rate });
    }
    let mut samples = a.samples.clone();
    samples.resize(WINDOW_SAMPLES, 0.0);
    Ok(AudioBuffer { samples, sample_rate: TARGET_RATE })
}

/// Decode, convert to 16 kHz and normalise length: everything the frontend
/// needs from a WAV file.
pub fn prepare(bytes: &[u8]) -> Result<AudioBuffer> {
    let decoded = decode_wav(bytes)?;
    let resampled = resample(&decoded, TARGET_RATE)?;
    pad_or_trim(&resampled)
}
