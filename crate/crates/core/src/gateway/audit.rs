use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::encoder::BackendKind;
use crate::error::{Error, Result};
use crate::head::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub timestamp_ms: u64,
    /// FNV-1a 64 of the request bytes, hex. The audio itself is never stored.
    pub input_digest: String,
    pub p_malicious: f64,
    pub threshold: f64,
    pub label: Label,
    pub review: bool,
    pub latency_classification_ms: f64,
    pub latency_total_ms: f64,
    pub backend_kind: BackendKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditError {
    pub timestamp_ms: u64,
    pub input_digest: String,
    pub error: String,
}

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuditEntry {
    Decision(AuditRecord),
    Error(AuditError),
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn digest_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

enum Msg {
    Entry(AuditEntry),
    Flush(mpsc::SyncSender<std::io::Result<()>>),
}

enum Sink {
    File { tx: Mutex<Option<Sender<Msg>>>, worker: Mutex<Option<JoinHandle<()>>> },
    Memory(Arc<Mutex<Vec<AuditEntry>>>),
}

/// Append-only audit trail. File-backed logs have a single writer thread that
/// drains whatever has queued, writes it as JSON lines and syncs once per
/// batch. Cloning is cheap and every clone feeds the same writer.
#[derive(Clone)]
pub struct AuditLog {
    sink: Arc<Sink>,
}

impl AuditLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path.as_ref())?;
        let (tx, rx) = mpsc::channel();
        let worker = std::thread::Builder::new()
            .name("audit-writer".into())
            .spawn(move || writer_loop(file, rx))?;
        Ok(Self {
            sink: Arc::new(Sink::File { tx: Mutex::new(Some(tx)), worker: Mutex::new(Some(worker)) }),
        })
    }

    /// Keeps entries in memory; used by the benchmark and tests.
    pub fn memory() -> Self {
        Self { sink: Arc::new(Sink::Memory(Arc::default())) }
    }

    pub fn record(&self, entry: AuditEntry) -> Result<()> {
        match &*self.sink {
            Sink::Memory(v) => {
                v.lock().expect("audit buffer poisoned").push(entry);
                Ok(())
            }
            Sink::File { tx, .. } => tx
                .lock()
                .expect("audit sender poisoned")
                .as_ref()
                .ok_or_else(closed)?
                .send(Msg::Entry(entry))
                .map_err(|_| closed()),
        }
    }

    /// Blocks until everything recorded so far is on disk.
    pub fn flush(&self) -> Result<()> {
        let Sink::File { tx, .. } = &*self.sink else { return Ok(()) };
        let (ack_tx, ack_rx) = mpsc::sync_channel(1);
        tx.lock()
            .expect("audit sender poisoned")
            .as_ref()
            .ok_or_else(closed)?
            .send(Msg::Flush(ack_tx))
            .map_err(|_| closed())?;
        ack_rx.recv().map_err(|_| closed())?.map_err(Error::from)
    }

    /// Entries held by a memory log (empty for file logs).
    pub fn entries(&self) -> Vec<AuditEntry> {
        match &*self.sink {
            Sink::Memory(v) => v.lock().expect("audit buffer poisoned").clone(),
            Sink::File { .. } => Vec::new(),
        }
    }
}

impl Drop for Sink {
    fn drop(&mut self) {
        if let Sink::File { tx, worker } = self {
            tx.get_mut().map(Option::take).ok();
            if let Some(handle) = worker.get_mut().ok().and_then(Option::take) {
                let _ = handle.join();
            }
        }
    }
}

fn closed() -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::BrokenPipe, "audit writer stopped"))
}

fn writer_loop(mut file: File, rx: Receiver<Msg>) {
    let mut buf = Vec::new();
    while let Ok(first) = rx.recv() {
        let mut acks = Vec::new();
        for msg in std::iter::once(first).chain(rx.try_iter()) {
            match msg {
                Msg::Entry(e) => {
                    serde_json::to_writer(&mut buf, &e).expect("audit entries serialise");
                    buf.push(b'\n');
                }
                Msg::Flush(ack) => acks.push(ack),
            }
        }
        let res = if buf.is_empty() { Ok(()) } else { file.write_all(&buf).and_then(|_| file.sync_data()) };
        if let Err(e) = &res {
            tracing::error!(error = %e, "audit write failed");
        }
        buf.clear();
        for ack in acks {
            let _ = ack.send(res.as_ref().map(|_| ()).map_err(|e| std::io::Error::new(e.kind(), e.to_string())));
        }
    }
}

/// Parse a JSON-lines audit log.
pub fn read_audit_log(path: impl AsRef<Path>) -> Result<Vec<AuditEntry>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::MalformedDataset(format!("audit line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}
