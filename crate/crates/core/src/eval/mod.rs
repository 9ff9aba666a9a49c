//! Evaluation lab: confusion matrices, derived metrics, rank-based ROC-AUC,
//! threshold sweeps and stratified partitioning.
//!
//! Labels are bytes: 0 = safe, 1 = malicious. Scores are malicious-class
//! probabilities.

mod metrics;
mod report;
mod roc;
mod split;
mod sweep;

pub use metrics::{confusion_matrix, evaluate, metrics_from_cm, ConfusionMatrix, MetricsReport};
pub use report::{metrics_table, sweep_table, write_jsonl};
pub use roc::roc_auc;
pub use split::{stratified_kfold, stratified_split, SplitIndices};
pub use sweep::{default_grid, select_threshold, threshold_sweep, SweepRow};

use crate::error::{Error, Result};

pub(crate) fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::OutOfRange(format!("label {l} is not 0 or 1")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteInput("scores"));
    }
    Ok(())
}
