//! Log-Mel frontend: Hann-windowed STFT, Slaney mel filterbank, log
//! compression and dynamic-range normalisation, producing the 80x3000 input
//! a Whisper-style encoder expects.

use std::io::{Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::{AudioBuffer, TARGET_RATE, WINDOW_SAMPLES};
use crate::error::{Error, Result};

pub const N_MELS: usize = 80;
pub const N_FFT: usize = 400;
pub const HOP: usize = 160;
pub const N_FRAMES: usize = 3000;
pub const N_BINS: usize = N_FFT / 2 + 1;

const LOG_FLOOR: f32 = 1e-10;
const DYNAMIC_RANGE: f32 = 8.0;

/// Row-major `n_mels x n_frames` matrix of normalised log-Mel values.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMelSpectrogram {
    pub values: Vec<f32>,
    pub n_mels: usize,
    pub n_frames: usize,
}

impl LogMelSpectrogram {
    pub fn new(values: Vec<f32>, n_mels: usize, n_frames: usize) -> Result<Self> {
        if values.len() != n_mels * n_frames {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", n_mels * n_frames),
                actual: format!("{}", values.len()),
            });
        }
        Ok(Self { values, n_mels, n_frames })
    }

    pub fn row(&self, mel: usize) -> &[f32] {
        &self.values[mel * self.n_frames..(mel + 1) * self.n_frames]
    }

    pub fn get(&self, mel: usize, frame: usize) -> f32 {
        self.values[mel * self.n_frames + frame]
    }

    pub fn is_conforming(&self) -> bool {
        self.n_mels == N_MELS && self.n_frames == N_FRAMES
    }

    pub fn row_means(&self) -> Vec<f64> {
        (0..self.n_mels)
            .map(|m| self.row(m).iter().map(|&v| v as f64).sum::<f64>() / self.n_frames as f64)
            .collect()
    }

    /// Debug dump: `VSMEL1`, two little-endian u32 dims, row-major f32 values.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"VSMEL1")?;
        w.write_all(&(self.n_mels as u32).to_le_bytes())?;
        w.write_all(&(self.n_frames as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 14];
        r.read_exact(&mut header)?;
        if &header[..6] != b"VSMEL1" {
            return Err(Error::MalformedDataset("bad spectrogram magic".into()));
        }
        let rows = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
        let mut bytes = vec![0u8; rows * cols * 4];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(values, rows, cols)
    }
}

/// Periodic Hann window: `0.5 * (1 - cos(2 pi k / n))`.
pub fn hann_window(n: usize) -> Result<Vec<f32>> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("window length {n} < 2")));
    }
    Ok((0..n)
        .map(|k| (0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())) as f32)
        .collect())
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

pub fn hz_to_mel(hz: f64) -> f64 {
    if hz >= MIN_LOG_HZ {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / log_step()
    } else {
        hz / F_SP
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    if mel >= MIN_LOG_MEL {
        MIN_LOG_HZ * (log_step() * (mel - MIN_LOG_MEL)).exp()
    } else {
        F_SP * mel
    }
}

/// Triangular, area-normalised mel filters over the positive FFT bins.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// Row-major `n_mels x n_bins`.
    pub weights: Vec<f32>,
    pub n_mels: usize,
    pub n_bins: usize,
    pub n_fft: usize,
    pub sample_rate: u32,
    /// `n_mels + 2` band edges in Hz; filter `i` peaks at `edges_hz[i + 1]`.
    pub edges_hz: Vec<f64>,
    /// Half-open range of nonzero bins per filter.
    support: Vec<(usize, usize)>,
}

impl MelFilterbank {
    pub fn row(&self, mel: usize) -> &[f32] {
        &self.weights[mel * self.n_bins..(mel + 1) * self.n_bins]
    }

    pub fn center_hz(&self, mel: usize) -> f64 {
        self.edges_hz[mel + 1]
    }

    pub fn support(&self, mel: usize) -> (usize, usize) {
        self.support[mel]
    }

    /// Project one power spectrum (length `n_bins`) onto the filters.
    pub fn apply(&self, power: &[f32], out: &mut [f32]) {
        for (m, slot) in out.iter_mut().enumerate().take(self.n_mels) {
            let (lo, hi) = self.support[m];
            let row = &self.row(m)[lo..hi];
            *slot = row.iter().zip(&power[lo..hi]).map(|(w, p)| w * p).sum();
        }
    }
}

pub fn build_mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32) -> MelFilterbank {
    let n_bins = n_fft / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let fft_hz: Vec<f64> = (0..n_bins).map(|k| k as f64 * nyquist / (n_bins - 1) as f64).collect();

    let mel_max = hz_to_mel(nyquist);
    let edges_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut weights = vec![0f32; n_mels * n_bins];
    let mut support = Vec::with_capacity(n_mels);
    for m in 0..n_mels {
        let (lo, mid, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
        let enorm = 2.0 / (hi - lo);
        let mut first = n_bins;
        let mut last = 0;
        for (k, &f) in fft_hz.iter().enumerate() {
            let rising = (f - lo) / (mid - lo);
            let falling = (hi - f) / (hi - mid);
            let w = rising.min(falling).max(0.0) * enorm;
            if w > 0.0 {
                weights[m * n_bins + k] = w as f32;
                first = first.min(k);
                last = k + 1;
            }
        }
        support.push((first.min(last), last));
    }
    MelFilterbank { weights, n_mels, n_bins, n_fft, sample_rate, edges_hz, support }
}

/// Reusable frontend: filterbank, window and FFT plan are built once and can be
/// shared read-only across threads.
pub struct Frontend {
    filterbank: MelFilterbank,
    window: Vec<f32>,
    fft: Arc<dyn Fft<f32>>,
}

impl std::fmt::Debug for Frontend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frontend").field("n_mels", &self.filterbank.n_mels).finish()
    }
}

impl Default for Frontend {
    fn default() -> Self {
        Self::new()
    }
}

impl Frontend {
    pub fn new() -> Self {
        let fft = FftPlanner::new().plan_fft_forward(N_FFT);
        Self {
            filterbank: build_mel_filterbank(N_MELS, N_FFT, TARGET_RATE),
            window: hann_window(N_FFT).expect("fixed window length"),
            fft,
        }
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// Mel power spectra before log compression, row-major `n_mels x 3000`.
    pub fn mel_power(&self, a: &AudioBuffer) -> Result<Vec<f32>> {
        if a.sample_rate != TARGET_RATE {
            return Err(Error::WrongRate { expected: TARGET_RATE, actual: a.sample_rate });
        }
        if a.samples.len() != WINDOW_SAMPLES {
            return Err(Error::WrongLength { expected: WINDOW_SAMPLES, actual: a.samples.len() });
        }
        let x = &a.samples;
        let n = x.len();
        let pad = N_FFT / 2;
        // Reflect padding (edge sample not repeated).
        let mut padded = Vec::with_capacity(n + 2 * pad);
        padded.extend((1..=pad).rev().map(|i| x[i]));
        padded.extend_from_slice(x);
        padded.extend((0..pad).map(|j| x[n - 2 - j]));

        let mut mel = vec![0f32; N_MELS * N_FRAMES];
        let mut buf = vec![Complex::new(0f32, 0f32); N_FFT];
        let mut scratch = vec![Complex::new(0f32, 0f32); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0f32; N_BINS];
        let mut column = vec![0f32; N_MELS];
        for t in 0..N_FRAMES {
            let frame = &padded[t * HOP..t * HOP + N_FFT];
            for ((c, &s), &w) in buf.iter_mut().zip(frame).zip(&self.window) {
                *c = Complex::new(s * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            self.filterbank.apply(&power, &mut column);
            for (m, &v) in column.iter().enumerate() {
                mel[m * N_FRAMES + t] = v;
            }
        }
        Ok(mel)
    }

    pub fn log_mel(&self, a: &AudioBuffer) -> Result<LogMelSpectrogram> {
        let mut values = self.mel_power(a)?;
        for v in values.iter_mut() {
            *v = v.max(LOG_FLOOR).log10();
        }
        let max = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let floor = max - DYNAMIC_RANGE;
        for v in values.iter_mut() {
            *v = (v.max(floor) + 4.0) / 4.0;
        }
        LogMelSpectrogram::new(values, N_MELS, N_FRAMES)
    }
}

/// One-shot convenience wrapper; prefer a shared [`Frontend`] in hot paths.
pub fn log_mel_spectrogram(a: &AudioBuffer) -> Result<LogMelSpectrogram> {
    Frontend::new().log_mel(a)
}
