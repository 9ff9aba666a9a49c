//! Classification service on the stub backend.
//!
//! cargo run --release --example serve -- [port] [head.vshp]
//! curl -s localhost:8080/health
//! curl -s --data-binary @clip.wav localhost:8080/v1/classify

use std::net::SocketAddr;
use std::sync::Arc;

use voiceguard::encoder::StubEncoder;
use voiceguard::gateway::{serve, AuditLog, Engine, EngineConfig};
use voiceguard::head::HeadParams;

fn main() -> voiceguard::Result<()> {
    tracing_subscriber::fmt().with_max_level(tracing::Level::INFO).init();
    let mut args = std::env::args().skip(1);
    let port = args.next().and_then(|s| s.parse().ok()).unwrap_or(8080);
    let head = match args.next() {
        Some(p) => HeadParams::load(p)?,
        None => HeadParams::standard(1),
    };
    let cfg = EngineConfig { service_port: port, ..EngineConfig::default() };
    let audit = AuditLog::open(&cfg.audit_log_path)?;
    println!("audit log: {}", cfg.audit_log_path.display());
    let engine = Arc::new(Engine::new(cfg, Arc::new(StubEncoder::new(0)), head, audit)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(serve(engine, SocketAddr::from(([127, 0, 0, 1], port))))
}
