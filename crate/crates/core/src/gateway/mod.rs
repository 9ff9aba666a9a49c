//! Deployment surface: layered configuration, the audited classification
//! engine, the HTTP service and the latency bench.

mod audit;
mod bench;
mod config;
mod engine;
mod service;

pub use audit::{digest_hex, fnv1a64, read_audit_log, AuditEntry, AuditError, AuditLog, AuditRecord};
pub use bench::{bench, bench_table, BenchReport, LatencyStats, MIN_REPETITIONS};
pub use config::{BackendChoice, ConfigOverrides, EngineConfig, DEFAULT_AUDIT_LOG, DEFAULT_PORT, ENV_PREFIX};
pub use engine::{classify_file, Classification, Engine, Prepared, Scored};
pub use service::{router, serve, AppState, ClassifyQuery, ClassifyResponse, HealthResponse, TranscriptState};
