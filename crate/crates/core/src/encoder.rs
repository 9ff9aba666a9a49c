//! Encoder backends. The pretrained encoder is an opaque external process;
//! a deterministic stub with the same shape contract serves tests and
//! desk-scale work.
//!
//! External process protocol: the backend executable is invoked as
//! `<model> encode --input-tensor <name> --output-tensor <name>` or
//! `<model> transcribe ...`. It reads one tensor (`[1, 80, 3000]`) from stdin
//! and writes either one tensor (`[1, 1500, 512]`) or UTF-8 text to stdout.
//! Tensors are framed as `VST1`, u32 rank, rank u32 dims, then f32 values,
//! all little-endian.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{LogMelSpectrogram, N_FRAMES, N_MELS};
use crate::rng::SplitMix64;
use crate::scalar::dot;

pub const ENCODED_FRAMES: usize = 1500;
pub const EMBED_DIM: usize = 512;

/// Row-major `frames x dim` encoder output.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub values: Vec<f32>,
    pub frames: usize,
    pub dim: usize,
}

impl EmbeddingSequence {
    pub fn new(values: Vec<f32>, frames: usize, dim: usize) -> Result<Self> {
        if values.len() != frames * dim {
            return Err(Error::ShapeMismatch {
                expected: format!("{frames}x{dim}"),
                actual: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("embedding sequence"));
        }
        Ok(Self { values, frames, dim })
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ExternalModel,
    Stub,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::ExternalModel => "external_model",
            BackendKind::Stub => "stub",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub model_path: Option<PathBuf>,
    pub supports_transcription: bool,
    pub seed: Option<u64>,
    pub input_tensor: String,
    pub output_tensor: String,
}

impl BackendDescriptor {
    pub fn stub(seed: u64) -> Self {
        Self {
            kind: BackendKind::Stub,
            model_path: None,
            supports_transcription: false,
            seed: Some(seed),
            input_tensor: "input_features".into(),
            output_tensor: "last_hidden_state".into(),
        }
    }

    pub fn external(model_path: impl Into<PathBuf>, supports_transcription: bool) -> Self {
        Self {
            kind: BackendKind::ExternalModel,
            model_path: Some(model_path.into()),
            supports_transcription,
            seed: None,
            input_tensor: "input_features".into(),
            output_tensor: "last_hidden_state".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            BackendKind::ExternalModel if self.model_path.is_none() => {
                Err(Error::Config("external_model backend requires a model path".into()))
            }
            BackendKind::Stub if self.seed.is_none() => {
                Err(Error::Config("stub backend requires a seed".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A loaded backend. Immutable after construction, so one instance serves any
/// number of concurrent requests.
pub trait EncoderBackend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    fn encode(&self, s: &LogMelSpectrogram) -> Result<EmbeddingSequence>;

    fn transcribe(&self, s: &LogMelSpectrogram) -> Result<String>;

    fn supports_transcription(&self) -> bool {
        self.descriptor().supports_transcription
    }
}

pub fn load_backend(desc: &BackendDescriptor) -> Result<Arc<dyn EncoderBackend>> {
    desc.validate()?;
    Ok(match desc.kind {
        BackendKind::Stub => Arc::new(StubEncoder::new(desc.seed.unwrap_or_default())),
        BackendKind::ExternalModel => Arc::new(ExternalEncoder::load(desc.clone())?),
    })
}

/// Load-and-run convenience. Loading the stub regenerates its projection, so
/// keep a backend from [`load_backend`] around in hot paths.
pub fn encode(s: &LogMelSpectrogram, desc: &BackendDescriptor) -> Result<EmbeddingSequence> {
    load_backend(desc)?.encode(s)
}

pub fn transcribe(s: &LogMelSpectrogram, desc: &BackendDescriptor) -> Result<String> {
    if !desc.supports_transcription {
        return Err(Error::TranscriptionUnsupported);
    }
    load_backend(desc)?.transcribe(s)
}

fn check_input(s: &LogMelSpectrogram) -> Result<()> {
    if !s.is_conforming() {
        return Err(Error::ShapeMismatch {
            expected: format!("{N_MELS}x{N_FRAMES}"),
            actual: format!("{}x{}", s.n_mels, s.n_frames),
        });
    }
    Ok(())
}

/// Deterministic stand-in for the pretrained encoder: average frame pairs
/// (3000 -> 1500), project each 80-vector to 512 dims with a fixed matrix
/// drawn from SplitMix64 in [-0.05, 0.05], then apply tanh.
pub struct StubEncoder {
    desc: BackendDescriptor,
    /// Row-major `EMBED_DIM x N_MELS`.
    projection: Vec<f32>,
}

impl StubEncoder {
    pub fn new(seed: u64) -> Self {
        Self { desc: BackendDescriptor::stub(seed), projection: stub_projection(seed) }
    }

    pub fn projection(&self) -> &[f32] {
        &self.projection
    }
}

pub fn stub_projection(seed: u64) -> Vec<f32> {
    let mut rng = SplitMix64::new(seed);
    (0..EMBED_DIM * N_MELS).map(|_| rng.uniform(-0.05, 0.05) as f32).collect()
}

impl EncoderBackend for StubEncoder {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.desc
    }

    fn encode(&self, s: &LogMelSpectrogram) -> Result<EmbeddingSequence> {
        check_input(s)?;
        let mut pooled = vec![0f32; N_MELS];
        let mut values = Vec::with_capacity(ENCODED_FRAMES * EMBED_DIM);
        for t in 0..ENCODED_FRAMES {
            for (m, p) in pooled.iter_mut().enumerate() {
                *p = 0.5 * (s.get(m, 2 * t) + s.get(m, 2 * t + 1));
            }
            for row in self.projection.chunks_exact(N_MELS) {
                let z = dot(row, &pooled);
                values.push(z.tanh());
            }
        }
        EmbeddingSequence::new(values, ENCODED_FRAMES, EMBED_DIM)
    }

    fn transcribe(&self, _s: &LogMelSpectrogram) -> Result<String> {
        Err(Error::TranscriptionUnsupported)
    }
}

/// Backend delegating to an external executable over stdin/stdout.
pub struct ExternalEncoder {
    desc: BackendDescriptor,
    program: PathBuf,
}

impl ExternalEncoder {
    pub fn load(desc: BackendDescriptor) -> Result<Self> {
        let program = desc
            .model_path
            .clone()
            .ok_or_else(|| Error::BackendLoadFailure("no model path configured".into()))?;
        let meta = std::fs::metadata(&program)
            .map_err(|e| Error::BackendLoadFailure(format!("{}: {e}", program.display())))?;
        if !meta.is_file() {
            return Err(Error::BackendLoadFailure(format!("{} is not a file", program.display())));
        }
        Ok(Self { desc, program })
    }

    fn run(&self, verb: &str, s: &LogMelSpectrogram) -> Result<Vec<u8>> {
        check_input(s)?;
        let mut child = Command::new(&self.program)
            .arg(verb)
            .args(["--input-tensor", &self.desc.input_tensor])
            .args(["--output-tensor", &self.desc.output_tensor])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::BackendLoadFailure(format!("{}: {e}", self.program.display())))?;
        let mut input = Vec::with_capacity(16 + s.values.len() * 4);
        write_tensor(&mut input, &[1, s.n_mels, s.n_frames], &s.values)?;
        // Feed stdin from a separate thread so a chatty child cannot deadlock us.
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || stdin.write_all(&input));
        let output = child
            .wait_with_output()
            .map_err(|e| Error::BackendLoadFailure(e.to_string()))?;
        writer
            .join()
            .map_err(|_| Error::BackendLoadFailure("stdin writer panicked".into()))?
            .map_err(|e| Error::BackendLoadFailure(format!("writing to backend: {e}")))?;
        if !output.status.success() {
            return Err(Error::BackendLoadFailure(format!(
                "backend exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(output.stdout)
    }
}

impl EncoderBackend for ExternalEncoder {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.desc
    }

    fn encode(&self, s: &LogMelSpectrogram) -> Result<EmbeddingSequence> {
        let out = self.run("encode", s)?;
        let (dims, values) = read_tensor(&out[..])?;
        if dims != [1, ENCODED_FRAMES, EMBED_DIM] {
            return Err(Error::ShapeMismatch {
                expected: format!("[1, {ENCODED_FRAMES}, {EMBED_DIM}]"),
                actual: format!("{dims:?}"),
            });
        }
        EmbeddingSequence::new(values, ENCODED_FRAMES, EMBED_DIM)
    }

    fn transcribe(&self, s: &LogMelSpectrogram) -> Result<String> {
        if !self.desc.supports_transcription {
            return Err(Error::TranscriptionUnsupported);
        }
        let out = self.run("transcribe", s)?;
        String::from_utf8(out)
            .map(|t| t.trim().to_string())
            .map_err(|e| Error::BackendLoadFailure(format!("transcript is not UTF-8: {e}")))
    }
}

pub fn write_tensor<W: Write>(mut w: W, dims: &[usize], values: &[f32]) -> Result<()> {
    w.write_all(b"VST1")?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<(Vec<usize>, Vec<f32>)> {
    let bad = |m: &str| Error::ShapeMismatch { expected: "VST1 tensor".into(), actual: m.into() };
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
    if &word != b"VST1" {
        return Err(bad("bad magic"));
    }
    r.read_exact(&mut word).map_err(|_| bad("truncated rank"))?;
    let rank = u32::from_le_bytes(word) as usize;
    if rank > 8 {
        return Err(bad("rank too large"));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        r.read_exact(&mut word).map_err(|_| bad("truncated dims"))?;
        dims.push(u32::from_le_bytes(word) as usize);
    }
    let count: usize = dims.iter().product();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 4 {
        return Err(bad(&format!("{} payload bytes for dims {dims:?}", bytes.len())));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((dims, values))
}

/// Answer one external-protocol request on behalf of `backend`. Lets any
/// in-process backend be exposed as an executable.
pub fn serve_protocol<R: Read, W: Write>(
    backend: &dyn EncoderBackend,
    verb: &str,
    input: R,
    mut output: W,
    transcript: Option<&str>,
) -> Result<()> {
    let (dims, values) = read_tensor(input)?;
    if dims != [1, N_MELS, N_FRAMES] {
        return Err(Error::ShapeMismatch {
            expected: format!("[1, {N_MELS}, {N_FRAMES}]"),
            actual: format!("{dims:?}"),
        });
    }
    let s = LogMelSpectrogram::new(values, N_MELS, N_FRAMES)?;
    match verb {
        "encode" => {
            let e = backend.encode(&s)?;
            write_tensor(&mut output, &[1, e.frames, e.dim], &e.values)?;
        }
        "transcribe" => {
            let text = match transcript {
                Some(t) => t.to_string(),
                None => backend.transcribe(&s)?,
            };
            output.write_all(text.as_bytes())?;
        }
        other => return Err(Error::Config(format!("unknown backend verb {other:?}"))),
    }
    output.flush()?;
    Ok(())
}
