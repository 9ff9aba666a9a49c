//! Classification path: mean pooling over encoder frames, a two-layer MLP
//! (Linear -> GELU -> Dropout -> Linear), softmax and the threshold decision.
//!
//! Class index 0 is safe, 1 is malicious, everywhere.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{EmbeddingSequence, EMBED_DIM};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scalar::{dot, Scalar};

pub const HIDDEN_DIM: usize = 256;
pub const N_CLASSES: usize = 2;
pub const SAFE: usize = 0;
pub const MALICIOUS: usize = 1;
/// 512*256 + 256 + 256*2 + 2.
pub const STANDARD_PARAM_COUNT: usize = 131_842;
pub const DEFAULT_THRESHOLD: f64 = 0.2;
pub const DEFAULT_REVIEW_BAND: (f64, f64) = (0.4, 0.6);

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams<T = f32> {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// `hidden_dim x input_dim`, row-major.
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    /// `N_CLASSES x hidden_dim`, row-major.
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Scalar> HeadParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w1: vec![T::zero(); hidden_dim * input_dim],
            b1: vec![T::zero(); hidden_dim],
            w2: vec![T::zero(); N_CLASSES * hidden_dim],
            b2: vec![T::zero(); N_CLASSES],
        }
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases, the
    /// usual default for linear layers.
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut fill = |n: usize, fan_in: usize| -> Vec<T> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| T::of(rng.uniform(-bound, bound))).collect()
        };
        let w1 = fill(hidden_dim * input_dim, input_dim);
        let b1 = fill(hidden_dim, input_dim);
        let w2 = fill(N_CLASSES * hidden_dim, hidden_dim);
        let b2 = fill(N_CLASSES, hidden_dim);
        Self { input_dim, hidden_dim, w1, b1, w2, b2 }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn tensors(&self) -> [&[T]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Scalar>(&self) -> HeadParams<U> {
        let c = |v: &[T]| v.iter().map(|x| U::of(x.as_f64())).collect();
        HeadParams {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            w1: c(&self.w1),
            b1: c(&self.b1),
            w2: c(&self.w2),
            b2: c(&self.b2),
        }
    }
}

impl HeadParams<f32> {
    pub fn standard(seed: u64) -> Self {
        Self::init(EMBED_DIM, HIDDEN_DIM, seed)
    }

    pub fn is_standard(&self) -> bool {
        self.input_dim == EMBED_DIM
            && self.hidden_dim == HIDDEN_DIM
            && self.param_count() == STANDARD_PARAM_COUNT
    }

    /// `VSHP1`, four u32 dims (w1 rows, w1 cols, w2 cols, w2 rows), then w1,
    /// b1, w2, b2 as f32, then a CRC-32 of everything after the magic.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut payload = Vec::with_capacity(16 + self.param_count() * 4);
        for d in [self.hidden_dim, self.input_dim, self.hidden_dim, N_CLASSES] {
            payload.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for t in self.tensors() {
            for v in t {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(b"VSHP1")?;
        w.write_all(&payload)?;
        w.write_all(&crc32fast::hash(&payload).to_le_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptParams(m.to_string());
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 5 + 16 + 4 || &bytes[..5] != b"VSHP1" {
            return Err(corrupt("bad magic or truncated header"));
        }
        let payload = &bytes[5..bytes.len() - 4];
        let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        if crc32fast::hash(payload) != stored {
            return Err(corrupt("checksum mismatch"));
        }
        let dim = |i: usize| u32::from_le_bytes(payload[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
        let (rows1, cols1, cols2, rows2) = (dim(0), dim(1), dim(2), dim(3));
        if rows1 != cols2 || rows2 != N_CLASSES {
            return Err(corrupt("inconsistent dimensions"));
        }
        let mut p = Self::zeros(cols1, rows1);
        let floats = &payload[16..];
        if floats.len() != p.param_count() * 4 {
            return Err(corrupt("payload length does not match dimensions"));
        }
        let mut values = floats
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        for t in p.tensors_mut() {
            for slot in t.iter_mut() {
                *slot = values.next().unwrap();
            }
        }
        if !p.is_finite() {
            return Err(Error::NonFiniteInput("head parameters"));
        }
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    /// Load a deployable head; anything but the 512-256-2 layout is rejected.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p = Self::read_from(BufReader::new(File::open(path)?))?;
        if !p.is_standard() {
            return Err(Error::CorruptParams(format!(
                "expected {STANDARD_PARAM_COUNT} parameters, found {}",
                p.param_count()
            )));
        }
        Ok(p)
    }
}

/// Component-wise mean over frames, accumulated in f64.
pub fn mean_pool(e: &EmbeddingSequence) -> Result<Vec<f32>> {
    if e.frames == 0 {
        return Err(Error::EmptySequence);
    }
    let mut acc = vec![0f64; e.dim];
    for row in e.rows() {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    let n = e.frames as f64;
    Ok(acc.into_iter().map(|a| (a / n) as f32).collect())
}

/// Exact GELU, `x * Phi(x)`.
pub fn gelu<T: Scalar>(x: T) -> T {
    let half = T::of(0.5);
    half * x * (T::one() + (x * T::of(std::f64::consts::FRAC_1_SQRT_2)).erf())
}

pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let half = T::of(0.5);
    let cdf = half * (T::one() + (x * T::of(std::f64::consts::FRAC_1_SQRT_2)).erf());
    let pdf = (-(x * x) * half).exp() * T::of(1.0 / (2.0 * std::f64::consts::PI).sqrt());
    cdf + x * pdf
}

pub enum ForwardMode<'a> {
    Infer,
    Train { rng: &'a mut SplitMix64, dropout_p: f64 },
}

/// Draw an inverted-dropout scale per hidden unit: `1/(1-p)` when kept, 0 when
/// dropped.
pub fn dropout_mask<T: Scalar>(rng: &mut SplitMix64, n: usize, p: f64) -> Vec<T> {
    let keep = T::of(1.0 / (1.0 - p));
    (0..n)
        .map(|_| if rng.next_f64() >= p { keep } else { T::zero() })
        .collect()
}

/// Hidden pre-activations `w1 h + b1`.
pub fn hidden_preactivation<T: Scalar>(h: &[T], p: &HeadParams<T>) -> Vec<T> {
    p.w1
        .chunks_exact(p.input_dim)
        .zip(&p.b1)
        .map(|(row, &b)| dot(row, h) + b)
        .collect()
}

pub fn output_logits<T: Scalar>(hidden: &[T], p: &HeadParams<T>) -> [T; 2] {
    let mut out = [T::zero(); 2];
    for (c, row) in p.w2.chunks_exact(p.hidden_dim).enumerate() {
        out[c] = dot(row, hidden) + p.b2[c];
    }
    out
}

pub fn head_forward<T: Scalar>(h: &[T], p: &HeadParams<T>, mode: ForwardMode<'_>) -> Result<[T; 2]> {
    if h.len() != p.input_dim {
        return Err(Error::ShapeMismatch {
            expected: format!("{}-vector", p.input_dim),
            actual: format!("{}-vector", h.len()),
        });
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("pooled embedding"));
    }
    let mut hidden: Vec<T> = hidden_preactivation(h, p).into_iter().map(gelu).collect();
    if let ForwardMode::Train { rng, dropout_p } = mode {
        let mask = dropout_mask::<T>(rng, p.hidden_dim, dropout_p);
        hidden.iter_mut().zip(&mask).for_each(|(a, &m)| *a = *a * m);
    }
    let logits = output_logits(&hidden, p);
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("logits"));
    }
    Ok(logits)
}

/// Two-class softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: [T; 2]) -> [T; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

/// Probability of the malicious class for a pooled embedding.
pub fn p_malicious(h: &[f32], p: &HeadParams) -> Result<f64> {
    let logits = head_forward(h, p, ForwardMode::Infer)?;
    Ok(softmax(logits)[MALICIOUS] as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Safe,
    Malicious,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Safe => "SAFE",
            Label::Malicious => "MALICIOUS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub label: Label,
    pub p_malicious: f64,
    pub threshold: f64,
    /// Borderline score, route to a human.
    pub review: bool,
}

/// Fail-closed decision: `p >= threshold` is malicious. Review band endpoints
/// are inclusive.
pub fn decide_with_band(p_mal: f64, threshold: f64, band: (f64, f64)) -> Result<Decision> {
    if !(0.0..=1.0).contains(&p_mal) {
        return Err(Error::OutOfRange(format!("probability {p_mal} outside [0, 1]")));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::OutOfRange(format!("threshold {threshold} outside (0, 1)")));
    }
    let label = if p_mal >= threshold { Label::Malicious } else { Label::Safe };
    Ok(Decision {
        label,
        p_malicious: p_mal,
        threshold,
        review: p_mal >= band.0 && p_mal <= band.1,
    })
}

pub fn decide(p_mal: f64, threshold: f64) -> Result<Decision> {
    decide_with_band(p_mal, threshold, DEFAULT_REVIEW_BAND)
}
