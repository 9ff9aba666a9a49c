use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use crate::audio;
use crate::encoder::{load_backend, EncoderBackend};
use crate::error::{Error, Result};
use crate::frontend::{Frontend, LogMelSpectrogram};
use crate::head::{decide_with_band, mean_pool, p_malicious, Decision, HeadParams};

use super::audit::{digest_hex, now_ms, AuditEntry, AuditError, AuditLog, AuditRecord};
use super::config::EngineConfig;

/// Decoded, padded and transformed request audio.
pub struct Prepared {
    pub digest: String,
    pub spectrogram: Arc<LogMelSpectrogram>,
    pub started: Instant,
}

/// The safety decision for a prepared request, before auditing.
pub struct Scored {
    pub decision: Decision,
    pub classification_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub decision: Decision,
    pub transcript: Option<String>,
    pub audit: AuditRecord,
}

/// Immutable inference state shared by every request: the frontend, the
/// encoder backend and the head, plus the audit sink.
pub struct Engine {
    cfg: EngineConfig,
    frontend: Frontend,
    backend: Arc<dyn EncoderBackend>,
    head: HeadParams,
    audit: AuditLog,
}

impl Engine {
    pub fn new(cfg: EngineConfig, backend: Arc<dyn EncoderBackend>, head: HeadParams, audit: AuditLog) -> Result<Self> {
        cfg.validate()?;
        if head.input_dim != crate::encoder::EMBED_DIM {
            return Err(Error::ShapeMismatch {
                expected: format!("head input dim {}", crate::encoder::EMBED_DIM),
                actual: head.input_dim.to_string(),
            });
        }
        Ok(Self { cfg, frontend: Frontend::new(), backend, head, audit })
    }

    /// Loads the backend, the head file and opens the audit log named in `cfg`.
    pub fn from_config(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let head_path = cfg
            .head_path
            .clone()
            .ok_or_else(|| Error::Config("no head parameter file given (--head or `head` key)".into()))?;
        let head = HeadParams::load(head_path)?;
        let backend = load_backend(&cfg.backend)?;
        let audit = AuditLog::open(&cfg.audit_log_path)?;
        Self::new(cfg, backend, head, audit)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn head(&self) -> &HeadParams {
        &self.head
    }

    pub fn audit_log(&self) -> &AuditLog {
        &self.audit
    }

    pub fn supports_transcription(&self) -> bool {
        self.backend.supports_transcription()
    }

    pub fn prepare(&self, bytes: &[u8]) -> Result<Prepared> {
        let started = Instant::now();
        let digest = digest_hex(bytes);
        let buffer = audio::prepare(bytes)?;
        let spectrogram = Arc::new(self.frontend.log_mel(&buffer)?);
        Ok(Prepared { digest, spectrogram, started })
    }

    /// Encoder, pooling, head and threshold. Never waits on transcription.
    pub fn score(&self, p: &Prepared) -> Result<Scored> {
        let embeddings = self.backend.encode(&p.spectrogram)?;
        let pooled = mean_pool(&embeddings)?;
        let prob = p_malicious(&pooled, &self.head)?;
        let decision = decide_with_band(prob, self.cfg.threshold, self.cfg.review_band)?;
        Ok(Scored { decision, classification_ms: ms_since(p.started) })
    }

    /// Transcript when the backend can produce one; failures are logged and
    /// dropped, they never affect the safety decision.
    pub fn transcribe(&self, spectrogram: &LogMelSpectrogram) -> Option<String> {
        if !self.backend.supports_transcription() {
            return None;
        }
        match self.backend.transcribe(spectrogram) {
            Ok(t) => Some(t),
            Err(e) => {
                tracing::warn!(error = %e, "transcription failed");
                None
            }
        }
    }

    /// Writes the decision record and returns it.
    pub fn commit(&self, p: &Prepared, s: &Scored, total_ms: f64) -> Result<AuditRecord> {
        let record = AuditRecord {
            timestamp_ms: now_ms(),
            input_digest: p.digest.clone(),
            p_malicious: s.decision.p_malicious,
            threshold: s.decision.threshold,
            label: s.decision.label,
            review: s.decision.review,
            latency_classification_ms: s.classification_ms,
            latency_total_ms: total_ms,
            backend_kind: self.backend.descriptor().kind,
        };
        self.audit.record(AuditEntry::Decision(record.clone()))?;
        Ok(record)
    }

    pub fn record_error(&self, bytes: &[u8], err: &Error) {
        let entry = AuditEntry::Error(AuditError {
            timestamp_ms: now_ms(),
            input_digest: digest_hex(bytes),
            error: err.to_string(),
        });
        if let Err(e) = self.audit.record(entry) {
            tracing::error!(error = %e, "could not audit a failed request");
        }
    }

    /// Full pipeline for one request. With `transcribe`, transcription runs on
    /// its own thread alongside the encoder pass.
    pub fn classify_bytes(&self, bytes: &[u8], transcribe: bool) -> Result<Classification> {
        let run = || -> Result<Classification> {
            let prepared = self.prepare(bytes)?;
            let want = transcribe && self.supports_transcription();
            let (scored, transcript) = std::thread::scope(|s| {
                let worker = want.then(|| s.spawn(|| self.transcribe(&prepared.spectrogram)));
                let scored = self.score(&prepared);
                let transcript = worker.and_then(|w| w.join().unwrap_or(None));
                (scored, transcript)
            });
            let scored = scored?;
            let audit = self.commit(&prepared, &scored, ms_since(prepared.started))?;
            Ok(Classification { decision: scored.decision, transcript, audit })
        };
        run().inspect_err(|e| self.record_error(bytes, e))
    }

    pub fn classify_path(&self, path: impl AsRef<Path>, transcribe: bool) -> Result<Classification> {
        let bytes = std::fs::read(path)?;
        self.classify_bytes(&bytes, transcribe)
    }
}

/// One-shot classification of a WAV file under `cfg`.
pub fn classify_file(path: impl AsRef<Path>, cfg: &EngineConfig, transcribe: bool) -> Result<Classification> {
    let engine = Engine::from_config(cfg.clone())?;
    let out = engine.classify_path(path, transcribe);
    engine.audit_log().flush()?;
    out
}

pub(crate) fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
