//! Labelled pooled-embedding datasets, their `VSED1` file format, and the
//! two-Gaussian synthetic generator used in place of the proprietary corpus.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    pub dim: usize,
    /// Row-major `len x dim`.
    pub embeddings: Vec<f32>,
    /// 0 = safe, 1 = malicious.
    pub labels: Vec<u8>,
}

impl EmbeddingDataset {
    pub fn new(dim: usize, embeddings: Vec<f32>, labels: Vec<u8>) -> Result<Self> {
        if dim == 0 || embeddings.len() != labels.len() * dim {
            return Err(Error::MalformedDataset(format!(
                "{} values for {} records of dim {dim}",
                embeddings.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::MalformedDataset(format!("label {l}")));
        }
        if embeddings.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("dataset embeddings"));
        }
        Ok(Self { dim, embeddings, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn embedding(&self, i: usize) -> &[f32] {
        &self.embeddings[i * self.dim..(i + 1) * self.dim]
    }

    /// `(safe, malicious)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let mal = self.labels.iter().filter(|&&l| l == 1).count();
        (self.len() - mal, mal)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        match self.class_counts() {
            (0, _) => Err(Error::EmptyClass("safe")),
            (_, 0) => Err(Error::EmptyClass("malicious")),
            _ => Ok(()),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut embeddings = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            embeddings.extend_from_slice(self.embedding(i));
            labels.push(self.labels[i]);
        }
        Self { dim: self.dim, embeddings, labels }
    }

    /// `VSED1`, u32 record count, u32 dim, then per record `dim` f32 values and
    /// one label byte. Little-endian throughout.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"VSED1")?;
        w.write_all(&(self.len() as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        let mut record = Vec::with_capacity(self.dim * 4 + 1);
        for i in 0..self.len() {
            record.clear();
            for v in self.embedding(i) {
                record.extend_from_slice(&v.to_le_bytes());
            }
            record.push(self.labels[i]);
            w.write_all(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::MalformedDataset(m.to_string());
        let mut header = [0u8; 13];
        r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        if &header[..5] != b"VSED1" {
            return Err(bad("bad magic"));
        }
        let count = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[9..13].try_into().unwrap()) as usize;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let stride = dim * 4 + 1;
        if bytes.len() != count * stride {
            return Err(bad(&format!("expected {} payload bytes, found {}", count * stride, bytes.len())));
        }
        let mut embeddings = Vec::with_capacity(count * dim);
        let mut labels = Vec::with_capacity(count);
        for rec in bytes.chunks_exact(stride) {
            embeddings.extend(rec[..dim * 4].chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])));
            labels.push(rec[dim * 4]);
        }
        Self::new(dim, embeddings, labels)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Two isotropic Gaussian clusters at `-separation/2 * u` (safe) and
/// `+separation/2 * u` (malicious) along a seeded random unit direction `u`.
#[derive(Debug, Clone, Copy)]
pub struct TwoGaussians {
    pub dim: usize,
    pub sigma: f64,
    pub separation: f64,
    pub seed: u64,
}

impl TwoGaussians {
    pub fn new(dim: usize, sigma: f64, separation: f64, seed: u64) -> Self {
        Self { dim, sigma, separation, seed }
    }

    pub fn direction(&self) -> Vec<f64> {
        let mut rng = SplitMix64::new(self.seed);
        let v: Vec<f64> = (0..self.dim).map(|_| rng.normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }

    /// `n_safe` safe records followed by `n_malicious` malicious ones.
    pub fn sample(&self, n_safe: usize, n_malicious: usize, sample_seed: u64) -> EmbeddingDataset {
        let u = self.direction();
        let mut rng = SplitMix64::new(sample_seed);
        let mut embeddings = Vec::with_capacity((n_safe + n_malicious) * self.dim);
        let mut labels = Vec::with_capacity(n_safe + n_malicious);
        for (label, n) in [(0u8, n_safe), (1u8, n_malicious)] {
            let sign = if label == 1 { 0.5 } else { -0.5 };
            for _ in 0..n {
                embeddings.extend(
                    u.iter()
                        .map(|&ui| (sign * self.separation * ui + self.sigma * rng.normal()) as f32),
                );
                labels.push(label);
            }
        }
        EmbeddingDataset { dim: self.dim, embeddings, labels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn synthetic_geometry() {
        let g = TwoGaussians::new(64, 0.1, 1.0, 3);
        let u = g.direction();
        assert!((u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        let ds = g.sample(2000, 2000, 4);
        assert_eq!(ds.class_counts(), (2000, 2000));
        // Projection onto u separates the classes around +-0.5.
        let proj = |i: usize| ds.embedding(i).iter().zip(&u).map(|(&x, &ui)| x as f64 * ui).sum::<f64>();
        let safe_mean = (0..2000).map(proj).sum::<f64>() / 2000.0;
        let mal_mean = (2000..4000).map(proj).sum::<f64>() / 2000.0;
        assert!((safe_mean + 0.5).abs() < 0.01 && (mal_mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn file_layout() {
        let ds = EmbeddingDataset::new(2, vec![1.0, 2.0, 3.0, 4.0], vec![0, 1]).unwrap();
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..5], b"VSED1");
        assert_eq!(buf.len(), 13 + 2 * 9);
        assert_eq!(buf[13 + 8], 0);
        assert_eq!(buf[13 + 17], 1);
    }

    #[test]
    fn bad_label_rejected() {
        let mut buf = Vec::new();
        EmbeddingDataset::new(1, vec![1.0], vec![1]).unwrap().write_to(&mut buf).unwrap();
        *buf.last_mut().unwrap() = 2;
        assert!(matches!(EmbeddingDataset::read_from(&buf[..]), Err(Error::MalformedDataset(_))));
        assert!(matches!(EmbeddingDataset::read_from(&buf[..10]), Err(Error::MalformedDataset(_))));
    }

    #[test]
    fn subset_and_classes() {
        let ds = TwoGaussians::new(4, 0.1, 1.0, 0).sample(3, 2, 1);
        let s = ds.subset(&[0, 4]);
        assert_eq!(s.labels, vec![0, 1]);
        assert_eq!(s.embedding(1), ds.embedding(4));
        assert!(ds.subset(&[0, 1]).require_both_classes().is_err());
    }

    proptest! {
        #[test]
        fn file_round_trip(seed in any::<u64>(), n in 1usize..20, dim in 1usize..16) {
            let ds = TwoGaussians::new(dim, 0.3, 1.0, seed).sample(n, n / 2, seed ^ 1);
            let mut buf = Vec::new();
            ds.write_to(&mut buf).unwrap();
            prop_assert_eq!(EmbeddingDataset::read_from(&buf[..]).unwrap(), ds);
        }
    }
}
