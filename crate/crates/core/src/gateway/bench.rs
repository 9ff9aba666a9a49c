use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::engine::{ms_since, Engine};

pub const MIN_REPETITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub mean_ms: f64,
}

impl LatencyStats {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty);
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = |q: f64| s[((q * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
        Ok(Self { p50_ms: rank(0.50), p95_ms: rank(0.95), mean_ms: s.iter().sum::<f64>() / s.len() as f64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub files: usize,
    pub repetitions: usize,
    pub warmup: usize,
    pub transcription: bool,
    /// Bytes in hand to safety decision.
    pub classification: LatencyStats,
    /// File read, classification, transcription when supported, audit record.
    pub full_pipeline: LatencyStats,
}

/// Single-threaded timing loop. Each iteration times the full pipeline and,
/// inside it, the classification path; the first `warmup` iterations per file
/// are discarded.
pub fn bench(engine: &Engine, paths: &[PathBuf], repetitions: usize, warmup: usize) -> Result<BenchReport> {
    if paths.is_empty() {
        return Err(Error::Config("bench needs at least one audio file".into()));
    }
    if repetitions < MIN_REPETITIONS {
        return Err(Error::Config(format!("bench needs at least {MIN_REPETITIONS} repetitions, got {repetitions}")));
    }
    let (mut class, mut full) = (Vec::new(), Vec::new());
    for path in paths {
        for i in 0..warmup + repetitions {
            let t0 = Instant::now();
            let bytes = std::fs::read(path)?;
            let c = engine.classify_bytes(&bytes, true)?;
            let total = ms_since(t0);
            if i >= warmup {
                class.push(c.audit.latency_classification_ms);
                full.push(total);
            }
        }
    }
    Ok(BenchReport {
        files: paths.len(),
        repetitions,
        warmup,
        transcription: engine.supports_transcription(),
        classification: LatencyStats::from_samples(&class)?,
        full_pipeline: LatencyStats::from_samples(&full)?,
    })
}

pub fn bench_table(r: &BenchReport) -> String {
    let mut out = format!("{:<16} {:>10} {:>10} {:>10}\n", "Path", "p50 ms", "p95 ms", "mean ms");
    for (name, s) in [("classification", &r.classification), ("full pipeline", &r.full_pipeline)] {
        out.push_str(&format!("{:<16} {:>10.2} {:>10.2} {:>10.2}\n", name, s.p50_ms, s.p95_ms, s.mean_ms));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let xs: Vec<f64> = (1..=20).map(f64::from).collect();
        let s = LatencyStats::from_samples(&xs).unwrap();
        assert_eq!((s.p50_ms, s.p95_ms, s.mean_ms), (10.0, 19.0, 10.5));
        let one = LatencyStats::from_samples(&[3.0]).unwrap();
        assert_eq!((one.p50_ms, one.p95_ms), (3.0, 3.0));
        assert!(LatencyStats::from_samples(&[]).is_err());
    }
}
