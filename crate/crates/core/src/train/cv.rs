use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::eval::{evaluate, stratified_kfold, MetricsReport};

use super::optim::TrainConfig;
use super::trainer::{predict_scores, train_head};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub val_indices: Vec<usize>,
    pub best_step: usize,
    pub metrics: MetricsReport,
}

/// Mean, sample standard deviation (n - 1), min and max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricStats {
    pub fn from_values(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Empty);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { mean, std, min, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub f1: MetricStats,
    pub precision: MetricStats,
    pub recall: MetricStats,
    pub roc_auc: MetricStats,
}

/// Stratified k-fold: train on k-1 folds (validating on the held-out fold for
/// checkpoint selection), score the held-out fold at `cfg.eval_threshold`.
/// Folds run in parallel with seed `cfg.seed + fold`.
pub fn run_cross_validation(ds: &EmbeddingDataset, k: usize, cfg: &TrainConfig) -> Result<CvReport> {
    cfg.validate()?;
    if k < 2 {
        return Err(Error::TooFewSamples(format!("k = {k}, need at least 2 folds")));
    }
    let folds = stratified_kfold(&ds.labels, k, cfg.seed)?;
    let results: Vec<FoldResult> = folds
        .par_iter()
        .enumerate()
        .map(|(fold, val_idx)| {
            let mut in_val = vec![false; ds.len()];
            val_idx.iter().for_each(|&i| in_val[i] = true);
            let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| !in_val[i]).collect();
            let (train, val) = (ds.subset(&train_idx), ds.subset(val_idx));
            let seed = cfg.seed.wrapping_add(fold as u64);
            let fold_cfg = TrainConfig { seed, ..cfg.clone() };
            let out = train_head(&train, &val, &fold_cfg)?;
            let scores = predict_scores(&out.params, &val);
            let metrics = evaluate(&scores, &val.labels, cfg.eval_threshold)?;
            tracing::info!(fold, f1 = metrics.f1, "fold finished");
            Ok(FoldResult { fold, seed, val_indices: val_idx.clone(), best_step: out.history.best_step, metrics })
        })
        .collect::<Result<_>>()?;

    let stat = |f: fn(&MetricsReport) -> f64| {
        MetricStats::from_values(&results.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    Ok(CvReport {
        k,
        f1: stat(|m| m.f1)?,
        precision: stat(|m| m.precision)?,
        recall: stat(|m| m.recall)?,
        roc_auc: stat(|m| m.roc_auc.unwrap_or(f64::NAN))?,
        folds: results,
    })
}

/// Aligned text table: one row per metric with mean, std, min, max.
pub fn cv_table(r: &CvReport) -> String {
    let mut out = format!("{:<10} {:>8} {:>9} {:>8} {:>8}\n", "Metric", "Mean", "Std", "Min", "Max");
    for (name, s) in [("F1", &r.f1), ("Precision", &r.precision), ("Recall", &r.recall), ("ROC-AUC", &r.roc_auc)] {
        out.push_str(&format!("{:<10} {:>8.4} {:>9} {:>8.4} {:>8.4}\n", name, s.mean, format!("±{:.4}", s.std), s.min, s.max));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TwoGaussians;

    #[test]
    fn aggregation_by_hand() {
        let s = MetricStats::from_values(&[0.98, 0.99, 1.00, 0.99, 0.98]).unwrap();
        assert!((s.mean - 0.988).abs() < 1e-12);
        // sum of squared deviations = 2.8e-4, / 4 = 7e-5
        assert!((s.std - 7e-5f64.sqrt()).abs() < 1e-12);
        assert!((s.std - 0.00837).abs() < 5e-6);
        assert_eq!((s.min, s.max), (0.98, 1.00));
        assert!(MetricStats::from_values(&[]).is_err());
    }

    #[test]
    fn small_cv_partitions_and_aggregates() {
        let ds = TwoGaussians::new(16, 0.1, 1.0, 5).sample(30, 20, 9);
        let cfg = TrainConfig {
            lr_max: 1e-2,
            warmup_steps: 5,
            max_steps: 60,
            batch_size: 8,
            micro_batch: 8,
            eval_every: 20,
            hidden_dim: 4,
            ..TrainConfig::default()
        };
        let r = run_cross_validation(&ds, 5, &cfg).unwrap();
        assert_eq!(r.folds.len(), 5);
        let mut all: Vec<usize> = r.folds.iter().flat_map(|f| f.val_indices.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        for f in &r.folds {
            let mal = f.val_indices.iter().filter(|&&i| ds.labels[i] == 1).count();
            assert_eq!((f.val_indices.len() - mal, mal), (6, 4));
        }
        let mean = r.folds.iter().map(|f| f.metrics.f1).sum::<f64>() / 5.0;
        assert!((r.f1.mean - mean).abs() < 1e-12);
        assert!(cv_table(&r).contains("ROC-AUC"));
        assert!(run_cross_validation(&ds, 1, &cfg).is_err());
        assert!(run_cross_validation(&ds, 25, &cfg).is_err());
    }
}
