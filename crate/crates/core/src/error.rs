use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report. Variants are grouped into families
/// that map onto process exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    // audio
    #[error("malformed WAV container: {0}")]
    MalformedContainer(String),
    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("empty audio input")]
    EmptyInput,
    #[error("expected {expected} Hz audio, got {actual} Hz")]
    WrongRate { expected: u32, actual: u32 },
    #[error("expected {expected} samples, got {actual}")]
    WrongLength { expected: usize, actual: usize },

    // encoder backend
    #[error("failed to load encoder backend: {0}")]
    BackendLoadFailure(String),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
    #[error("backend does not support transcription")]
    TranscriptionUnsupported,

    // head / numerics
    #[error("empty embedding sequence")]
    EmptySequence,
    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("corrupt parameter file: {0}")]
    CorruptParams(String),

    // training / evaluation
    #[error("class {0} has no samples")]
    EmptyClass(&'static str),
    #[error("non-finite loss at step {step}: {detail}")]
    NonFiniteLoss { step: usize, detail: String },
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("length mismatch: {0} scores vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("only one class present")]
    SingleClass,
    #[error("malformed dataset: {0}")]
    MalformedDataset(String),

    // gateway
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Exit-code family: 2 usage/config, 3 I/O, 4 model or backend, 5 data format.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Config(_) | OutOfRange(_) => 2,
            Io(_) => 3,
            BackendLoadFailure(_)
            | ShapeMismatch { .. }
            | TranscriptionUnsupported
            | CorruptParams(_)
            | NonFiniteLoss { .. }
            | NonFiniteInput(_) => 4,
            MalformedContainer(_)
            | UnsupportedEncoding(_)
            | EmptyInput
            | WrongRate { .. }
            | WrongLength { .. }
            | EmptySequence
            | EmptyClass(_)
            | TooFewSamples(_)
            | LengthMismatch(..)
            | Empty
            | SingleClass
            | MalformedDataset(_) => 5,
        }
    }
}
